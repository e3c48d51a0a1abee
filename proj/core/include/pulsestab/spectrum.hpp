#ifndef PULSESTAB_SPECTRUM_HPP
#define PULSESTAB_SPECTRUM_HPP

#include <complex>
#include <string>
#include <vector>

#include "pulsestab/model.hpp"
#include "pulsestab/pulse.hpp"
#include "pulsestab/types.hpp"

namespace pulsestab {

/// Direct spectral data of the discretized linearized operator
///   L = M^{-1/2} (D d^2/dx^2 + Q B(x)) M^{-1/2}
/// on [-X, X] with homogeneous Dirichlet ends.
struct SpectrumReport {
  std::vector<std::complex<double>> eigenvalues;
  int n_plus = 0;              // real eigenvalues > re_tol (multiplicity)
  double zero_mode_error = 0.0; // residual of w0' as eigenfunction at 0
  bool ess_bound_ok = false;
  bool sufficiency_ok = false;
  bool zero_simple = false;
  double re_tol = 0.0;
  double im_tol = 0.0;
  double zero_cluster_radius = 0.0;
};

struct SpectrumOptions {
  int num_intervals = 2000; // N; matrix size is n * (N - 1)
  double half_width = 0.0;  // 0 -> use the profile half-width
  double tol_scale = 1e-6;  // re_tol = im_tol = tol_scale * ||matrix||
  double pulse_tol = 1e-10; // pulse solver tolerance (zero-cluster floor)
};

/// Second-order centered finite-difference matrix of L; size n*(N-1).
/// Throws when N < 50.
Mat discretize_L(const SkewGradientModel& model, const PulseProfile& profile,
                 const SpectrumOptions& opts);

/// Full eigensolve of the discretized operator (tridiagonal symmetric path
/// for scalar models, dense general otherwise) plus the zero-mode residual
/// and the near-zero cluster analysis.
SpectrumReport eigen_report(const Mat& matrix, const SkewGradientModel& model,
                            const PulseProfile& profile, const SpectrumOptions& opts);

/// True iff J A_lambda(inf) is hyperbolic (no eigenvalue within 1e-10 of
/// the imaginary axis) for every probed lambda >= 0.  Negative probes are
/// rejected.
bool essential_spectrum_ok(const SkewGradientModel& model,
                           const std::vector<double>& lambda_probes);

/// Operator conditions  -G2 > 0  and  Id > G3 (-G2)^{-2} G3^*  for the
/// blocks of G = -Q L (activator/inhibitor splitting).  For FitzHugh-
/// Nagumo shaped models the closed-form criterion tau < gamma^2 is
/// reported alongside.
struct SufficiencyDetails {
  bool ok = false;
  double min_eig_negG2 = 0.0;   // smallest eigenvalue of -G2
  double coupling_norm = 0.0;   // largest eigenvalue of G3 (-G2)^{-2} G3^T
  bool closed_form_applicable = false;
  bool closed_form_ok = false;  // tau < gamma^2 when applicable
};
SufficiencyDetails sufficiency_check(const SkewGradientModel& model,
                                     const PulseProfile& profile,
                                     const SpectrumOptions& opts);

} // namespace pulsestab

#endif
