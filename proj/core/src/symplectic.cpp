#include "pulsestab/symplectic.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>

namespace pulsestab {

namespace {

Mat thin_orthonormalize(const Mat& raw) {
  Eigen::HouseholderQR<Mat> qr(raw);
  Mat q = qr.householderQ() * Mat::Identity(raw.rows(), raw.cols());
  // keep a deterministic orientation: positive R diagonal
  Mat r = qr.matrixQR().topRows(raw.cols()).triangularView<Eigen::Upper>();
  for (int j = 0; j < raw.cols(); ++j) {
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  }
  return q;
}

/// Principal angles between two orthonormal bases (any column counts),
/// ascending.  Uses the singular values s of [A | B]: s = sqrt(1 - cos t),
/// i.e. t = 2 asin(s / sqrt 2), which stays accurate for tiny angles.
Vec principal_angles_bases(const Mat& a, const Mat& b) {
  const int count = static_cast<int>(std::min(a.cols(), b.cols()));
  const auto total = a.cols() + b.cols();
  Mat joint(a.rows(), total);
  joint << a, b;
  Eigen::JacobiSVD<Mat> svd(joint);
  // the Gram spectrum of [A | B] has `total` entries; pad the implicit
  // zeros when the stacked basis exceeds the ambient dimension
  Vec s = Vec::Zero(total);
  s.head(svd.singularValues().size()) = svd.singularValues();
  Vec angles(count);
  for (int i = 0; i < count; ++i) {
    const double v = std::min(s(total - 1 - i) / std::numbers::sqrt2, 1.0);
    angles(i) = 2.0 * std::asin(v);
  }
  return angles;
}

int intersection_dim_bases(const Mat& a, const Mat& b, double tol) {
  const Vec angles = principal_angles_bases(a, b);
  int dim = 0;
  for (int i = 0; i < angles.size(); ++i) {
    if (std::sin(angles(i)) < tol) ++dim;
  }
  return dim;
}

/// Orthonormal basis of span(a) ∩ span(b) from the principal vectors with
/// angle below tol.
Mat intersection_basis_bases(const Mat& a, const Mat& b, double tol) {
  const int dim = intersection_dim_bases(a, b, tol);
  if (dim == 0) return Mat(a.rows(), 0);
  Eigen::JacobiSVD<Mat> svd(a.transpose() * b,
                            Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat basis(a.rows(), dim);
  for (int i = 0; i < dim; ++i) {
    const Vec from_a = a * svd.matrixU().col(i);
    const Vec from_b = b * svd.matrixV().col(i);
    basis.col(i) = 0.5 * (from_a + from_b);
  }
  return thin_orthonormalize(basis);
}

} // namespace

Mat symplectic_J(int n) {
  Mat j = Mat::Zero(2 * n, 2 * n);
  j.topRightCorner(n, n) = -Mat::Identity(n, n);
  j.bottomLeftCorner(n, n) = Mat::Identity(n, n);
  return j;
}

double symplectic_form(const Vec& u, const Vec& v) {
  if (u.size() != v.size()) throw Error("symplectic_form: dimension mismatch");
  if (u.size() % 2 != 0 || u.size() == 0) {
    throw Error("symplectic_form: vectors must have even length");
  }
  const auto n = u.size() / 2;
  // omega(u, v) = <J u, v> with J = [[0, -Id], [Id, 0]]
  return u.head(n).dot(v.tail(n)) - u.tail(n).dot(v.head(n));
}

double LagrangianFrame::isotropy_defect() const {
  const Mat j = symplectic_J(n());
  return (columns.transpose() * j * columns).cwiseAbs().maxCoeff();
}

LagrangianFrame LagrangianFrame::from_columns(const Mat& raw, double iso_tol) {
  if (raw.rows() != 2 * raw.cols() || raw.cols() < 1) {
    throw Error("Lagrangian frame must be 2n x n");
  }
  Eigen::JacobiSVD<Mat> rank_check(raw);
  if (rank_check.singularValues()(raw.cols() - 1) <
      1e-12 * rank_check.singularValues()(0)) {
    throw Error("Lagrangian frame is rank deficient");
  }
  LagrangianFrame frame;
  frame.columns = thin_orthonormalize(raw);
  if (frame.isotropy_defect() > iso_tol) {
    throw Error("frame spans a non-Lagrangian subspace (defect " +
                std::to_string(frame.isotropy_defect()) + ")");
  }
  // Project the span onto the Lagrangian manifold: with S = Z^T J Z the
  // correction Z += (1/2) J Z S cancels the defect to first order.
  const Mat j = symplectic_J(frame.n());
  for (int iter = 0; iter < 4; ++iter) {
    const Mat s = frame.columns.transpose() * j * frame.columns;
    if (s.cwiseAbs().maxCoeff() < 1e-14) break;
    frame.columns += 0.5 * j * frame.columns * s;
    frame.columns = thin_orthonormalize(frame.columns);
  }
  return frame;
}

LagrangianFrame reference_lagrangian(int n, int activators) {
  if (activators < 1 || activators > n) {
    throw Error("reference_lagrangian: need 1 <= j <= n");
  }
  Mat cols = Mat::Zero(2 * n, n);
  for (int i = 0; i < n; ++i) {
    if (i < activators) {
      cols(i, i) = 1.0; // p-component of an activator direction
    } else {
      cols(n + i, i) = 1.0; // q-component of an inhibitor direction
    }
  }
  return LagrangianFrame::from_columns(cols);
}

Vec principal_angles(const LagrangianFrame& a, const LagrangianFrame& b) {
  return principal_angles_bases(a.columns, b.columns);
}

int intersection_dim(const LagrangianFrame& a, const LagrangianFrame& b,
                     double tol) {
  if (!(tol > 0.0) || tol >= 0.1) throw Error("intersection tolerance must lie in (0, 0.1)");
  return intersection_dim_bases(a.columns, b.columns, tol);
}

Mat intersection_basis(const LagrangianFrame& a, const LagrangianFrame& b,
                       double tol) {
  return intersection_basis_bases(a.columns, b.columns, tol);
}

double frame_gap(const LagrangianFrame& a, const LagrangianFrame& b) {
  Mat joint(a.columns.rows(), a.columns.cols() + b.columns.cols());
  joint << a.columns, b.columns;
  Eigen::JacobiSVD<Mat> svd(joint);
  return svd.singularValues()(svd.singularValues().size() - 1);
}

CrossingRecord crossing_form_flow(const Mat& a_sym, const LagrangianFrame& moving,
                                  const LagrangianFrame& reference, double tol) {
  if ((a_sym - a_sym.transpose()).cwiseAbs().maxCoeff() > 1e-9) {
    throw Error("crossing_form_flow: coefficient matrix must be symmetric");
  }
  const Mat basis = intersection_basis(moving, reference, tol);
  if (basis.cols() == 0) throw Error("no crossing here");
  Mat form = basis.transpose() * a_sym * basis;
  form = 0.5 * (form + form.transpose());
  Eigen::SelfAdjointEigenSolver<Mat> es(form);

  CrossingRecord record;
  record.intersection_dim = static_cast<int>(basis.cols());
  record.form_eigenvalues = es.eigenvalues();
  const double floor = 1e-10 * std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
  int sig = 0;
  for (int i = 0; i < es.eigenvalues().size(); ++i) {
    if (es.eigenvalues()(i) > floor) ++sig;
    if (es.eigenvalues()(i) < -floor) --sig;
  }
  record.signature = sig;
  return record;
}

namespace {

struct PairAt {
  LagrangianFrame first;
  LagrangianFrame second;
  double gap = 0.0;
};

PairAt eval_pair(const LagrangianPairPath& path, double t) {
  PairAt at{path.first(t), path.second(t), 0.0};
  at.gap = frame_gap(at.first, at.second);
  return at;
}

/// Golden-section localisation of a minimum of the pair gap.
double refine_minimum(const LagrangianPairPath& path, double lo, double hi,
                      double width) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = hi - inv_phi * (hi - lo);
  double d = lo + inv_phi * (hi - lo);
  double fc = eval_pair(path, c).gap;
  double fd = eval_pair(path, d).gap;
  while (hi - lo > width) {
    if (fc < fd) {
      hi = d;
      d = c;
      fd = fc;
      c = hi - inv_phi * (hi - lo);
      fc = eval_pair(path, c).gap;
    } else {
      lo = c;
      c = d;
      fc = fd;
      d = lo + inv_phi * (hi - lo);
      fd = eval_pair(path, d).gap;
    }
  }
  return 0.5 * (lo + hi);
}

/// Graph-coordinate section of a Lagrangian path: W(t) xi = Z(t) c(t) - xi
/// with c(t) = (Z*^T Z(t))^{-1} Z*^T xi, so xi + W(t) xi lies in span Z(t)
/// and W(t*) = 0.  omega(xi_i, W(t) xi_j) feeds the crossing form.
Mat graph_offset_matrix(const LagrangianFrame& base, const LagrangianFrame& at_t,
                        const Mat& basis) {
  const Mat overlap = base.columns.transpose() * at_t.columns; // n x n
  const Mat coords = base.columns.transpose() * basis;         // n x k
  const Mat c = overlap.partialPivLu().solve(coords);          // n x k
  return at_t.columns * c - basis;                             // 2n x k
}

Mat omega_matrix(const Mat& left, const Mat& right) {
  const auto n2 = left.rows();
  const Mat j = symplectic_J(static_cast<int>(n2 / 2));
  return (j * left).transpose() * right;
}

/// Relative crossing form (second path minus first) on the intersection
/// basis at t0, by symmetric or one-sided differences of the graph offset.
Mat pair_crossing_form(const LagrangianPairPath& path, double t0, const Mat& basis,
                       double h, int side) {
  const PairAt base = eval_pair(path, t0);
  auto offsets = [&](double t) {
    const PairAt at = eval_pair(path, t);
    const Mat w1 = graph_offset_matrix(base.first, at.first, basis);
    const Mat w2 = graph_offset_matrix(base.second, at.second, basis);
    return std::pair<Mat, Mat>(w1, w2);
  };
  Mat d1, d2;
  if (side == 0) {
    auto [w1p, w2p] = offsets(t0 + h);
    auto [w1m, w2m] = offsets(t0 - h);
    d1 = (omega_matrix(basis, w1p) - omega_matrix(basis, w1m)) / (2.0 * h);
    d2 = (omega_matrix(basis, w2p) - omega_matrix(basis, w2m)) / (2.0 * h);
  } else {
    const double s = static_cast<double>(side);
    auto [w1a, w2a] = offsets(t0 + s * h);
    auto [w1b, w2b] = offsets(t0 + s * 2.0 * h);
    // second-order one-sided difference with W(t0) = 0
    d1 = s * (4.0 * omega_matrix(basis, w1a) - omega_matrix(basis, w1b)) / (2.0 * h);
    d2 = s * (4.0 * omega_matrix(basis, w2a) - omega_matrix(basis, w2b)) / (2.0 * h);
  }
  Mat form = d2 - d1;
  return 0.5 * (form + form.transpose());
}

struct FormSummary {
  Vec eigenvalues;
  int positive = 0;
  int negative = 0;
  bool degenerate = false;
};

FormSummary summarize_form(const Mat& form, double degenerate_tol) {
  Eigen::SelfAdjointEigenSolver<Mat> es(form);
  FormSummary out;
  out.eigenvalues = es.eigenvalues();
  const double scale = std::max(out.eigenvalues.cwiseAbs().maxCoeff(), 1e-30);
  const double floor = degenerate_tol * std::max(1.0, scale);
  for (int i = 0; i < out.eigenvalues.size(); ++i) {
    const double e = out.eigenvalues(i);
    if (e > floor) {
      ++out.positive;
    } else if (e < -floor) {
      ++out.negative;
    } else {
      out.degenerate = true;
    }
  }
  return out;
}

} // namespace

MaslovResult maslov_index_pair(const LagrangianPairPath& path,
                               const MaslovOptions& opts) {
  if (!(path.b > path.a)) {
    if (path.b == path.a) return {}; // empty interval
    throw Error("maslov_index_pair: interval must satisfy a <= b");
  }
  std::vector<double> samples = path.samples;
  samples.push_back(path.a);
  samples.push_back(path.b);
  std::sort(samples.begin(), samples.end());
  samples.erase(std::unique(samples.begin(), samples.end(),
                            [&](double x, double y) {
                              return std::abs(x - y) < 1e-12 * (path.b - path.a);
                            }),
                samples.end());
  if (samples.front() < path.a - 1e-12 || samples.back() > path.b + 1e-12) {
    throw Error("maslov_index_pair: samples outside the interval");
  }

  const int m = static_cast<int>(samples.size());
  std::vector<PairAt> at;
  at.reserve(static_cast<size_t>(m));
  for (double t : samples) at.push_back(eval_pair(path, t));
  for (int k = 1; k < m; ++k) {
    // what must be sampled smoothly is the relative configuration of the
    // pair (its principal angles decide the crossings); the absolute
    // frames may rotate together much faster, bounded only by the
    // anti-aliasing guard below
    const Vec rel_prev = principal_angles(at[k - 1].first, at[k - 1].second);
    const Vec rel_here = principal_angles(at[k].first, at[k].second);
    const double rel_step = (rel_here - rel_prev).cwiseAbs().maxCoeff();
    const double step1 = principal_angles(at[k - 1].first, at[k].first).maxCoeff();
    const double step2 = principal_angles(at[k - 1].second, at[k].second).maxCoeff();
    if (rel_step > 0.2 || std::max(step1, step2) > 1.2) {
      throw Error("maslov_index_pair: consecutive frames differ by more than 0.2 rad; refine the sampling");
    }
  }

  const double span = path.b - path.a;
  const double h = opts.fd_step > 0.0 ? opts.fd_step : 1e-5 * span;
  const double end_pad = std::max(4.0 * h, 1e-7 * span);

  // candidate crossing locations: refined local minima of the pair gap
  std::vector<double> locations;
  for (int k = 1; k + 1 < m; ++k) {
    if (at[k].gap < 0.45 && at[k].gap <= at[k - 1].gap && at[k].gap <= at[k + 1].gap) {
      const double t = refine_minimum(path, samples[k - 1], samples[k + 1],
                                      opts.refine_width * span);
      if (eval_pair(path, t).gap < opts.crossing_tol) locations.push_back(t);
    }
  }
  // split clusters the global scan cannot resolve: rescan a small window
  // around each located crossing and keep every distinct dip
  {
    std::vector<double> split;
    for (double t : locations) {
      size_t idx = 0;
      while (idx + 1 < samples.size() && samples[idx + 1] < t) ++idx;
      const double local = std::max(
          samples[std::min(idx + 1, samples.size() - 1)] - samples[idx], 16.0 * h);
      const double lo = std::max(path.a, t - 2.0 * local);
      const double hi = std::min(path.b, t + 2.0 * local);
      const int fine = 64;
      std::vector<double> ts(fine + 1);
      std::vector<double> gaps(fine + 1);
      for (int q = 0; q <= fine; ++q) {
        ts[static_cast<size_t>(q)] = lo + (hi - lo) * q / fine;
        gaps[static_cast<size_t>(q)] = eval_pair(path, ts[static_cast<size_t>(q)]).gap;
      }
      for (int q = 1; q < fine; ++q) {
        if (gaps[q] <= gaps[q - 1] && gaps[q] <= gaps[q + 1]) {
          const double tt =
              refine_minimum(path, ts[q - 1], ts[q + 1], opts.refine_width * span);
          if (eval_pair(path, tt).gap < opts.crossing_tol) split.push_back(tt);
        }
      }
    }
    // union with the originals; deduplication keeps one point per dip
    locations.insert(locations.end(), split.begin(), split.end());
  }
  std::sort(locations.begin(), locations.end());
  locations.erase(std::unique(locations.begin(), locations.end(),
                              [&](double x, double y) {
                                return std::abs(x - y) < 1e3 * opts.refine_width * span;
                              }),
                  locations.end());

  MaslovResult result;
  enum class Role { LeftEnd, Interior, RightEnd };
  auto record_crossing = [&](double t, Role role, int fd_side) {
    const PairAt here = eval_pair(path, t);
    const double dim_tol = std::max(10.0 * here.gap, opts.crossing_tol);
    const Mat basis = intersection_basis(here.first, here.second, dim_tol);
    if (basis.cols() == 0) return false;
    const Mat form = pair_crossing_form(path, t, basis, h, fd_side);
    const FormSummary summary = summarize_form(form, opts.degenerate_tol);
    CrossingRecord rec;
    rec.location = t;
    rec.intersection_dim = static_cast<int>(basis.cols());
    rec.form_eigenvalues = summary.eigenvalues;
    rec.signature = summary.positive - summary.negative;
    switch (role) {
      case Role::Interior:
        if (summary.degenerate) {
          throw Error("irregular crossing at t = " + std::to_string(t) +
                      "; refine path or perturb");
        }
        result.index += rec.signature;
        break;
      case Role::LeftEnd:
        result.index += summary.positive; // co-index at the left endpoint
        break;
      case Role::RightEnd:
        result.index -= summary.negative; // index at the right endpoint
        break;
    }
    result.crossings.push_back(rec);
    return true;
  };

  bool left_recorded = false, right_recorded = false;
  if (at.front().gap < opts.crossing_tol) {
    left_recorded = record_crossing(path.a, Role::LeftEnd, +1);
  }
  if (at.back().gap < opts.crossing_tol) {
    right_recorded = record_crossing(path.b, Role::RightEnd, -1);
  }
  for (double t : locations) {
    const bool near_left = t < path.a + end_pad;
    const bool near_right = t > path.b - end_pad;
    if (near_left && left_recorded) continue;  // same crossing as the endpoint
    if (near_right && right_recorded) continue;
    // genuinely interior crossing; difference stencil leans away from a
    // nearby boundary so the path is never sampled outside [a, b]
    int fd_side = 0;
    if (t - path.a < 3.0 * h) fd_side = +1;
    if (path.b - t < 3.0 * h) fd_side = -1;
    record_crossing(t, Role::Interior, fd_side);
  }
  std::sort(result.crossings.begin(), result.crossings.end(),
            [](const CrossingRecord& x, const CrossingRecord& y) {
              return x.location < y.location;
            });
  return result;
}

SplitQuadraticForm quadratic_form_q(const LagrangianFrame& alpha,
                                    const LagrangianFrame& beta,
                                    const LagrangianFrame& delta, double tol) {
  const auto rows = alpha.columns.rows();
  Mat joint(rows, beta.columns.cols() + delta.columns.cols());
  joint << beta.columns, delta.columns;

  // orthonormal basis of beta + delta (rank-revealing)
  Eigen::JacobiSVD<Mat> svd(joint, Eigen::ComputeThinU);
  int rank = 0;
  for (int i = 0; i < svd.singularValues().size(); ++i) {
    if (svd.singularValues()(i) > 1e-10 * svd.singularValues()(0)) ++rank;
  }
  const Mat sum_basis = svd.matrixU().leftCols(rank);

  SplitQuadraticForm out;
  out.domain_basis = intersection_basis_bases(alpha.columns, sum_basis, tol);
  const int k = static_cast<int>(out.domain_basis.cols());
  out.form = Mat::Zero(k, k);
  if (k == 0) return out;

  // minimum-norm splits x = y + z with y in beta, z in delta
  Eigen::CompleteOrthogonalDecomposition<Mat> cod(joint);
  Mat ys(rows, k), zs(rows, k);
  for (int i = 0; i < k; ++i) {
    const Vec coef = cod.solve(out.domain_basis.col(i));
    ys.col(i) = beta.columns * coef.head(beta.columns.cols());
    zs.col(i) = delta.columns * coef.tail(delta.columns.cols());
  }
  Mat q = omega_matrix(ys, zs);
  out.form = 0.5 * (q + q.transpose());
  return out;
}

namespace {
int negative_inertia(const Mat& form, double tol) {
  if (form.rows() == 0) return 0;
  Eigen::SelfAdjointEigenSolver<Mat> es(form);
  const double floor = tol * std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
  int count = 0;
  for (int i = 0; i < es.eigenvalues().size(); ++i) {
    if (es.eigenvalues()(i) < -floor) ++count;
  }
  return count;
}

int subspace_triple_dim(const LagrangianFrame& a, const LagrangianFrame& b,
                        const LagrangianFrame& c, double tol) {
  const Mat ab = intersection_basis_bases(a.columns, b.columns, tol);
  if (ab.cols() == 0) return 0;
  return intersection_dim_bases(ab, c.columns, tol);
}
} // namespace

int triple_index(const LagrangianFrame& alpha, const LagrangianFrame& beta,
                 const LagrangianFrame& kappa, double tol) {
  const SplitQuadraticForm q = quadratic_form_q(alpha, beta, kappa, tol);
  const int m_minus = negative_inertia(q.form, 1e-8);
  const int dim_ak = intersection_dim(alpha, kappa, tol);
  const int dim_abk = subspace_triple_dim(alpha, beta, kappa, tol);
  return m_minus + dim_ak - dim_abk;
}

int hormander_index(const LagrangianFrame& l1, const LagrangianFrame& l2,
                    const LagrangianFrame& k1, const LagrangianFrame& k2,
                    double tol) {
  const int via_kappa = triple_index(l1, l2, k2, tol) - triple_index(l1, l2, k1, tol);
  const int via_lambda = triple_index(l1, k1, k2, tol) - triple_index(l2, k1, k2, tol);
  if (via_kappa != via_lambda) {
    throw Error("hormander_index: the two triple-index expressions disagree (" +
                std::to_string(via_kappa) + " vs " + std::to_string(via_lambda) +
                "); numerical rank misjudged");
  }
  return via_kappa;
}

} // namespace pulsestab
