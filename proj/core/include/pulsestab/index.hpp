#ifndef PULSESTAB_INDEX_HPP
#define PULSESTAB_INDEX_HPP

#include <optional>
#include <string>
#include <vector>

#include "pulsestab/hamiltonian.hpp"
#include "pulsestab/model.hpp"
#include "pulsestab/pulse.hpp"
#include "pulsestab/symplectic.hpp"

namespace pulsestab {

enum class Stability { Unstable, StableSufficient, Inconclusive };

std::string to_string(Stability verdict);

/// Aggregate result of the index computations.
struct IndexReport {
  int i_w0 = 0;                         // sum of intersection dims over tau
  std::vector<CrossingRecord> crossings; // tau-crossings
  int spectral_flow = 0;
  std::vector<CrossingRecord> sf_crossings; // lambda-crossings
  double criterion_integral = 0.0;      // integral <Q M w0', w0'>
  bool quadrature_warning = false;
  std::optional<double> tau0_value;     // two-component models only
  Stability verdict = Stability::Inconclusive;
  std::string verdict_reason;
};

struct IndexOptions {
  double lambda_max = 0.0;   // 0 -> lambda_hat from the hypothesis report
  int tau_samples = 0;       // 0 -> 4 per unit of 1/decay_rate, min 160
  int lambda_samples = 240;
  double crossing_tol = 1e-8;
  double angle_stationary_tol = 1e-6; // T_cap stopping rule
  // width (as a fraction of lambda_hat) of the interval around lambda = 0
  // treated as the displaced translation kernel in the spectral flow
  double zero_exclusion_fraction = 1e-4;
};

/// Stability index: crossings of E^u(tau) with the reference Lagrangian
/// over the scan window at lambda = eps = 0.  Every crossing form must be
/// positive definite; a non-positive eigenvalue aborts (the structural
/// hypotheses exclude it).
struct StabilityIndexResult {
  int i_w0 = 0;
  std::vector<CrossingRecord> crossings;
  double t_cap = 0.0;
};
StabilityIndexResult stability_index(const SkewGradientModel& model,
                                     const PulseProfile& profile,
                                     const IndexOptions& opts = {});

/// Spectral flow of the Hamiltonian-operator family over
/// lambda in [0, lambda_max], computed as minus the Maslov index of the
/// pair (E^s_lambda(0), E^u_lambda(0)).  Crossing locations coincide with
/// zeros of evans_gap.  epsilon shifts B by -eps*Id (validation runs).
struct SpectralFlowResult {
  int spectral_flow = 0;
  std::vector<CrossingRecord> crossings;
};
SpectralFlowResult spectral_flow_F(const SkewGradientModel& model,
                                   const PulseProfile& profile,
                                   double lambda_min, double lambda_max,
                                   double epsilon = 0.0,
                                   const IndexOptions& opts = {});

/// Momentum integral  <Q M w0', w0'>  over the grid; also reports tau0 for
/// two-component models.
struct CriterionResult {
  double value = 0.0;
  bool quadrature_warning = false;
  std::optional<double> tau0_value;
};
CriterionResult criterion_integral(const SkewGradientModel& model,
                                   const PulseProfile& profile);

/// Assembles the verdict:
///  - Unstable when i_w0 > 0 or the criterion integral is negative,
///  - StableSufficient when i_w0 = 0, the spectrum sufficiency conditions
///    hold and zero is a simple eigenvalue,
///  - Inconclusive otherwise.
IndexReport make_verdict(const StabilityIndexResult& idx,
                         const SpectralFlowResult& sf,
                         const CriterionResult& crit,
                         bool sufficiency_ok, bool zero_simple);

} // namespace pulsestab

#endif
