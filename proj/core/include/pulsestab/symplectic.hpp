#ifndef PULSESTAB_SYMPLECTIC_HPP
#define PULSESTAB_SYMPLECTIC_HPP

#include <functional>
#include <vector>

#include "pulsestab/types.hpp"

namespace pulsestab {

// Convention used throughout: J = [[0, -Id], [Id, 0]] acting on (p, q)
// coordinates, omega(u, v) = <J u, v>.  With this choice the flow
// z' = J A(t) z of a symmetric A has crossing form <A xi, xi>.

/// Returns the 2n x 2n standard symplectic structure matrix.
Mat symplectic_J(int n);

/// omega(u, v) = <J u, v>.  Throws on dimension mismatch or odd length.
double symplectic_form(const Vec& u, const Vec& v);

/// A Lagrangian subspace of (R^{2n}, omega) represented by an orthonormal
/// 2n x n frame.  Construction orthonormalizes and verifies isotropy.
struct LagrangianFrame {
  Mat columns; // 2n x n, orthonormal

  int n() const { return static_cast<int>(columns.cols()); }
  int ambient_dim() const { return static_cast<int>(columns.rows()); }

  /// max |Z^T J Z| entry; ~0 for a genuine Lagrangian frame.
  double isotropy_defect() const;

  /// Orthonormalizes `raw` (must have full column rank) and projects the
  /// span onto the Lagrangian manifold; throws if the span is not
  /// Lagrangian to within `iso_tol` before correction.
  static LagrangianFrame from_columns(const Mat& raw, double iso_tol = 1e-8);
};

/// Reference Lagrangian {(p, q) : p in V^+(Q), q in V^-(Q)} for
/// Q = diag(Id_j, -Id_{n-j}), in (p_1..p_n, q_1..q_n) coordinates.
LagrangianFrame reference_lagrangian(int n, int activators);

/// Principal angles between span(a) and span(b), ascending, in [0, pi/2].
Vec principal_angles(const LagrangianFrame& a, const LagrangianFrame& b);

/// dim(span(a) ∩ span(b)) decided by principal-angle thresholding:
/// number of angles with sin(theta) < tol.  tol must lie in (0, 0.1).
int intersection_dim(const LagrangianFrame& a, const LagrangianFrame& b,
                     double tol = 1e-8);

/// Orthonormal basis of span(a) ∩ span(b) at tolerance tol (may be empty).
Mat intersection_basis(const LagrangianFrame& a, const LagrangianFrame& b,
                       double tol = 1e-8);

/// Smallest singular value of [a | b]; zero iff the spans intersect.
double frame_gap(const LagrangianFrame& a, const LagrangianFrame& b);

/// A located crossing of a Lagrangian path (or pair) with its reference:
/// parameter value, intersection dimension and the eigenvalues/signature
/// of the crossing form on the intersection.
struct CrossingRecord {
  double location = 0.0;
  int intersection_dim = 0;
  Vec form_eigenvalues;
  int signature = 0;
};

/// Crossing form of a Lagrangian path moving under z' = J A(t) z against a
/// fixed reference V at the current time: the quadratic form
/// xi -> <A xi, xi> restricted to an orthonormal basis of span(L) ∩ span(V).
/// Throws "no crossing here" when the intersection is empty at `tol`.
CrossingRecord crossing_form_flow(const Mat& a_sym, const LagrangianFrame& moving,
                                  const LagrangianFrame& reference,
                                  double tol = 1e-8);

/// A pair of Lagrangian paths over [a, b], evaluated on demand.  `samples`
/// is the detection grid; consecutive frames of either path must differ by
/// principal angle < 0.2 rad or the index computation refuses to proceed.
struct LagrangianPairPath {
  double a = 0.0;
  double b = 1.0;
  std::function<LagrangianFrame(double)> first;
  std::function<LagrangianFrame(double)> second;
  std::vector<double> samples;
};

struct MaslovOptions {
  double crossing_tol = 1e-8;   // principal-angle threshold for crossings
  double refine_width = 1e-10;  // final bracket width of crossing location
  double fd_step = 0.0;         // 0 -> 1e-5 * (b - a)
  double degenerate_tol = 1e-7; // relative floor for regular form eigenvalues
};

struct MaslovResult {
  int index = 0;
  std::vector<CrossingRecord> crossings;
};

/// Maslov index of the pair (first, second) computed from crossing forms:
/// co-index of the form at the left endpoint, signed signature at interior
/// crossings, minus the index of the form at the right endpoint.  Crossing
/// forms are obtained by finite differences of the two paths; the relative
/// form is (form of `second`) - (form of `first`).  Irregular interior
/// crossings raise an error asking for refinement.
MaslovResult maslov_index_pair(const LagrangianPairPath& path,
                               const MaslovOptions& opts = {});

/// Quadratic form Q(alpha, beta; delta) on alpha ∩ (beta + delta):
/// Q(x1, x2) = omega(y1, z2) for the minimum-norm splits x = y + z with
/// y in beta, z in delta.  Returns the basis of the domain (columns) and
/// the symmetrized form matrix; an empty domain yields 0 x 0.
struct SplitQuadraticForm {
  Mat domain_basis;
  Mat form;
};
SplitQuadraticForm quadratic_form_q(const LagrangianFrame& alpha,
                                    const LagrangianFrame& beta,
                                    const LagrangianFrame& delta,
                                    double tol = 1e-8);

/// Triple index  iota(alpha, beta, kappa)
///   = m^-(Q(alpha, beta; kappa)) + dim(alpha ∩ kappa)
///     - dim(alpha ∩ beta ∩ kappa).
int triple_index(const LagrangianFrame& alpha, const LagrangianFrame& beta,
                 const LagrangianFrame& kappa, double tol = 1e-8);

/// Hormander index  s(l1, l2; k1, k2) = iota(l1, l2, k2) - iota(l1, l2, k1).
/// The equivalent expression iota(l1, k1, k2) - iota(l2, k1, k2) is
/// evaluated as well; disagreement signals a rank misjudgement and throws.
int hormander_index(const LagrangianFrame& l1, const LagrangianFrame& l2,
                    const LagrangianFrame& k1, const LagrangianFrame& k2,
                    double tol = 1e-8);

} // namespace pulsestab

#endif
