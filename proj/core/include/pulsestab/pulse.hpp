#ifndef PULSESTAB_PULSE_HPP
#define PULSESTAB_PULSE_HPP

#include <string>

#include "pulsestab/model.hpp"
#include "pulsestab/types.hpp"

namespace pulsestab {

/// Standing pulse on a truncated domain [-X, X]: grid values, derivatives
/// and decay metadata.  Row i of `w` / `w_prime` holds w(x_i) / w'(x_i).
struct PulseProfile {
  Vec grid;       // strictly increasing, spans [-X, X]
  Mat w;          // (N+1) x n
  Mat w_prime;    // (N+1) x n
  double residual_norm = 0.0;
  double decay_rate = 0.0; // slowest decay exponent of the linearized tails

  int n() const { return static_cast<int>(w.cols()); }
  int num_nodes() const { return static_cast<int>(grid.size()); }
  double half_width() const { return grid(grid.size() - 1); }
  double spacing() const { return grid(1) - grid(0); }

  /// Cubic Hermite interpolation from (w, w_prime); clamps to the end
  /// values outside the grid (the tails are below tail tolerance there).
  Vec value_at(double x) const;
  Vec deriv_at(double x) const;

  void validate() const;
};

struct PulseSolveOptions {
  double half_width = 0.0;   // 0 -> 15 / decay_rate of the rest state
  int num_intervals = 3000;  // uniform mesh intervals
  double tol = 1e-10;        // Newton residual max-norm target
  double tail_tol = 1e-7;    // admissible |w|, |w'| at the ends
  int max_iterations = 50;
};

/// Solves D w'' + Q grad_v(w) = 0 with projection boundary conditions
/// (no outgoing components at the truncated ends) by second-order
/// centered collocation and a bordered Newton iteration; the phase
/// condition <w_guess', w - w_guess> = 0 pins the translate.
///
/// `initial_guess` may be null, in which case a built-in seed is used:
/// the sech^2 pulse for the scalar model, and for FitzHugh-Nagumo shaped
/// models the cubic-nonlinearity activator pulse with the inhibitor
/// slaved by an inner Newton solve.
PulseProfile solve_pulse(const SkewGradientModel& model,
                         const PulseSolveOptions& opts,
                         const PulseProfile* initial_guess = nullptr);

/// Trapezoid/Simpson value of  integral <Q * weight * w', w'> dx  over the
/// profile grid.  `coarse_warning` is set when Richardson comparison of
/// the two rules disagrees by more than 1%.
double profile_quadrature(const PulseProfile& profile, const Vec& weight_diag,
                          const Vec& q_diag, bool* coarse_warning = nullptr);

/// Threshold ratio  integral |u'|^2 / integral |v'|^2  for two-component
/// activator-inhibitor pulses.  Throws on a flat inhibitor component.
double tau0(const PulseProfile& profile);

/// CSV round trip, header `x,w1..wn,dw1..dwn`, full double precision.
void save_profile(const PulseProfile& profile, const std::string& path);
PulseProfile load_profile(const std::string& path);

} // namespace pulsestab

#endif
