#ifndef PULSESTAB_MODEL_HPP
#define PULSESTAB_MODEL_HPP

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "pulsestab/types.hpp"

namespace pulsestab {

struct PulseProfile; // pulse.hpp

/// Reaction-diffusion system  M w_t = D w_xx + Q grad_v(w)  with diagonal
/// positive M (temporal rates), diagonal positive D (diffusion) and
/// signature matrix Q = diag(Id_j, -Id_{n-j}).  The first `activators`
/// components ascend the potential, the rest descend it.
struct FhnParams {
  double d = 1.0;
  double tau = 1.0;
  double gamma = 1.0;
  double beta = 0.5;
};

struct SkewGradientModel {
  int n = 0;          // number of components
  int activators = 0; // j, 1 <= j <= n

  Vec m_diag; // diag(M) > 0
  Vec d_diag; // diag(D) > 0
  Vec q_diag; // diag(Q), +1 for activators then -1

  std::function<Vec(const Vec&)> grad_v; // R^n -> R^n
  std::function<Mat(const Vec&)> hess_v; // R^n -> Sym(n)

  Mat b_inf; // hess_v at the rest state w = 0

  std::optional<FhnParams> fhn; // set by build_fhn

  double l() const { return m_diag.minCoeff(); } // smallest temporal rate

  Mat Q() const { return q_diag.asDiagonal(); }
  Mat M() const { return m_diag.asDiagonal(); }
  Mat D() const { return d_diag.asDiagonal(); }

  /// Basic structural checks (dimensions, positivity, Q^2 = Id).
  /// Throws Error on violation.
  void validate() const;
};

/// Margins for the two structural hypotheses.
///  - h1: sym(Q B(inf)) negative definite with margin c2,
///  - h2: B(x) positive definite on the inhibitor subspace with margin
///    c3_h2 (absent when there are no inhibitors).
/// c1 bounds |<Q B(x) v, v>| along the pulse, lambda_hat = c1 / min(M),
/// epsilon_max is the admissible size of the B - eps*I perturbation.
struct HypothesisReport {
  bool h1_holds = false;
  double c2 = 0.0;
  bool h2_holds = false;
  std::optional<double> c3_h2;
  double c1 = 0.0;
  double lambda_hat = 0.0;
  double epsilon_max = 0.0;
  std::string violation; // empty when both hypotheses hold
};

/// FitzHugh-Nagumo type system
///   u_t     = d u_xx + u(1-u)(u-beta) - v
///   tau v_t = v_xx - gamma v - v^3 + u
/// as a skew-gradient model with M = diag(1, tau), D = diag(d, 1),
/// Q = diag(1, -1).  Requires d, tau, gamma > 0 and 0 < beta < 1.
SkewGradientModel build_fhn(double d, double tau, double gamma, double beta);

/// Scalar desk-check model: n = 1, M = D = Q = 1, grad_v(u) = u^2 - u.
/// Its pulse equation u'' - u + u^2 = 0 has the closed-form solution
/// (3/2) sech^2(x/2).
SkewGradientModel build_scalar_bistable();

/// Polynomial-potential model: V(w) = sum_k coeff_k * prod_i w_i^{e_ki}.
/// grad_v / hess_v are exact term-wise derivatives.
struct PolynomialTerm {
  double coeff = 0.0;
  std::vector<int> exponents; // one per component
};
SkewGradientModel build_polynomial_model(int n, int activators,
                                         const Vec& m_diag, const Vec& d_diag,
                                         const std::vector<PolynomialTerm>& terms);

/// Evaluates both hypothesis margins on the grid of `profile` (plus the
/// rest-state limit) and derives c1 (with a 5% safety factor for the
/// unsampled tails), lambda_hat and epsilon_max.
HypothesisReport check_hypotheses(const SkewGradientModel& model,
                                  const PulseProfile& profile);

} // namespace pulsestab

#endif
