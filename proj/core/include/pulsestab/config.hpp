#ifndef PULSESTAB_CONFIG_HPP
#define PULSESTAB_CONFIG_HPP

#include <optional>
#include <string>
#include <vector>

#include "pulsestab/evolve.hpp"
#include "pulsestab/index.hpp"
#include "pulsestab/model.hpp"
#include "pulsestab/pulse.hpp"
#include "pulsestab/spectrum.hpp"

namespace pulsestab {

/// Run configuration, read from a JSON file with sections
/// model / pulse / index / spectrum / evolve.  Unknown keys are rejected
/// with the offending path.
struct RunConfig {
  // model section
  std::string model_kind; // "fhn" | "scalar" | "polynomial"
  double fhn_d = 1.0, fhn_tau = 1.0, fhn_gamma = 1.0, fhn_beta = 0.5;
  int poly_n = 0, poly_activators = 0;
  Vec poly_m_diag, poly_d_diag;
  std::vector<PolynomialTerm> poly_terms;

  PulseSolveOptions pulse;
  std::string seed_profile_path; // optional initial guess

  IndexOptions index;
  SpectrumOptions spectrum;

  EvolveOptions evolve;
  double perturbation_amplitude = 1e-4;
  unsigned long long rng_seed = 1;

  std::string config_hash; // FNV-1a of the canonical JSON dump

  SkewGradientModel make_model() const;
};

RunConfig load_config(const std::string& path);
RunConfig parse_config_text(const std::string& text, const std::string& origin);

/// One line per option with its default, for --help.
std::string config_reference();

} // namespace pulsestab

#endif
