#ifndef PULSESTAB_EVOLVE_HPP
#define PULSESTAB_EVOLVE_HPP

#include <vector>

#include "pulsestab/model.hpp"
#include "pulsestab/pulse.hpp"
#include "pulsestab/types.hpp"

namespace pulsestab {

/// Time integration record of M w_t = D w_xx + Q grad_v(w) around a pulse.
struct EvolutionRun {
  double dt = 0.0;
  double t_final = 0.0;
  std::vector<double> snapshot_times;
  std::vector<Mat> snapshots;       // (N+1) x n fields
  std::vector<double> distances;    // distance to the translated pulse family
  double growth_rate = 0.0;
  double fit_r_squared = 0.0;
  double drift = 0.0;               // shift of the pulse peak over the run
  bool blew_up = false;
  bool low_confidence_fit = false;
};

struct EvolveOptions {
  double dt = 5e-3;
  double t_final = 10.0;
  int num_snapshots = 200;
  double blowup_norm = 1e6;
};

/// Crank-Nicolson diffusion + second-order Adams-Bashforth reaction on the
/// profile grid with Neumann ends.  Snapshots are taken at uniformly
/// spaced times; distances are measured modulo translation against
/// `reference` (normally the pulse itself).
EvolutionRun evolve(const SkewGradientModel& model, const Mat& initial,
                    const PulseProfile& reference, const EvolveOptions& opts);

/// Log-linear fit of snapshot distances on [t_begin, t_end]; requires at
/// least 10 snapshots in the window.  Non-monotone log-distance flags the
/// fit as low confidence.
struct GrowthFit {
  double rate = 0.0;
  double r_squared = 0.0;
  bool low_confidence = false;
};
GrowthFit growth_rate_fit(const EvolutionRun& run, double t_begin, double t_end);

} // namespace pulsestab

#endif
