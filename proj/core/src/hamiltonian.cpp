#include "pulsestab/hamiltonian.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <vector>

namespace pulsestab {

namespace {

// Dormand-Prince 5(4) coefficients.
constexpr double kC[7] = {0.0, 1.0 / 5, 3.0 / 10, 4.0 / 5, 8.0 / 9, 1.0, 1.0};
constexpr double kA[7][6] = {
    {},
    {1.0 / 5},
    {3.0 / 40, 9.0 / 40},
    {44.0 / 45, -56.0 / 15, 32.0 / 9},
    {19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729},
    {9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176, -5103.0 / 18656},
    {35.0 / 384, 0.0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84},
};
constexpr double kB5[7] = {35.0 / 384,      0.0,  500.0 / 1113, 125.0 / 192,
                           -2187.0 / 6784, 11.0 / 84, 0.0};
constexpr double kB4[7] = {5179.0 / 57600,  0.0,   7571.0 / 16695, 393.0 / 640,
                           -92097.0 / 339200, 187.0 / 2100, 1.0 / 40};

struct ComplexSplit {
  Mat plus;
  Mat minus;
  double gap = 0.0;
  double max_imag = 0.0;
};

// Realified invariant subspaces of a general matrix by the sign of Re(mu).
ComplexSplit spectral_split(const Mat& m, double axis_guard,
                            const std::string& axis_error) {
  Eigen::EigenSolver<Mat> es(m);
  if (es.info() != Eigen::Success) throw Error("eigensolve failed");
  const int dim = static_cast<int>(m.rows());
  ComplexSplit split;
  split.gap = std::numeric_limits<double>::infinity();
  std::vector<Vec> plus, minus;
  std::vector<char> used(static_cast<size_t>(dim), 0);
  for (int k = 0; k < dim; ++k) {
    const std::complex<double> mu = es.eigenvalues()(k);
    if (std::abs(mu.real()) < axis_guard) throw Error(axis_error);
    split.gap = std::min(split.gap, std::abs(mu.real()));
    split.max_imag = std::max(split.max_imag, std::abs(mu.imag()));
    if (used[static_cast<size_t>(k)]) continue;
    auto& bucket = mu.real() > 0 ? plus : minus;
    if (std::abs(mu.imag()) < 1e-12) {
      bucket.push_back(es.eigenvectors().col(k).real());
    } else {
      for (int j = k + 1; j < dim; ++j) {
        if (!used[static_cast<size_t>(j)] &&
            std::abs(es.eigenvalues()(j).real() - mu.real()) < 1e-9 &&
            std::abs(es.eigenvalues()(j).imag() + mu.imag()) < 1e-9) {
          used[static_cast<size_t>(j)] = 1;
          break;
        }
      }
      bucket.push_back(es.eigenvectors().col(k).real());
      bucket.push_back(es.eigenvectors().col(k).imag());
    }
  }
  auto pack = [dim](const std::vector<Vec>& cols) {
    Mat out(dim, static_cast<int>(cols.size()));
    for (int j = 0; j < out.cols(); ++j) out.col(j) = cols[static_cast<size_t>(j)];
    return out;
  };
  split.plus = pack(plus);
  split.minus = pack(minus);
  return split;
}

} // namespace

Mat assemble_A(const HamiltonianFamily& family, double x) {
  const SkewGradientModel& model = *family.model;
  const PulseProfile& profile = *family.profile;
  const int n = model.n;
  if (family.lambda < 0.0) throw Error("lambda must be non-negative");

  Mat b;
  if (x < profile.grid(0) || x > profile.grid(profile.num_nodes() - 1)) {
    b = model.b_inf; // tail extension
  } else {
    b = model.hess_v(profile.value_at(x));
  }

  Mat a = Mat::Zero(2 * n, 2 * n);
  Vec qd_inv = (model.q_diag.array() * model.d_diag.array()).inverse().matrix();
  a.topLeftCorner(n, n) = qd_inv.asDiagonal();
  a.bottomRightCorner(n, n) =
      b - family.epsilon * Mat::Identity(n, n) -
      family.lambda * Mat((model.q_diag.array() * model.m_diag.array()).matrix().asDiagonal());
  return a;
}

AsymptoticSplit asymptotic_split(const HamiltonianFamily& family) {
  const SkewGradientModel& model = *family.model;
  const int n = model.n;

  Mat a_inf = Mat::Zero(2 * n, 2 * n);
  Vec qd_inv = (model.q_diag.array() * model.d_diag.array()).inverse().matrix();
  a_inf.topLeftCorner(n, n) = qd_inv.asDiagonal();
  a_inf.bottomRightCorner(n, n) =
      model.b_inf - family.epsilon * Mat::Identity(n, n) -
      family.lambda * Mat((model.q_diag.array() * model.m_diag.array()).matrix().asDiagonal());

  const Mat ja = symplectic_J(n) * a_inf;
  const ComplexSplit split = spectral_split(
      ja, 1e-10, "non-hyperbolic asymptotics; rest-state damping violated?");
  if (split.plus.cols() != n || split.minus.cols() != n) {
    throw Error("asymptotic splitting is unbalanced");
  }

  AsymptoticSplit out;
  out.v_plus = LagrangianFrame::from_columns(split.plus);
  out.v_minus = LagrangianFrame::from_columns(split.minus);
  out.spectral_gap = split.gap;
  out.max_imag = split.max_imag;
  return out;
}

namespace {

// statically capped matrices keep the per-step work allocation free
using SmallMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 8, 8>;

/// In-place orthonormalization plus projection of the span onto the
/// Lagrangian manifold (same scheme as LagrangianFrame::from_columns).
void relagrangianize(SmallMat& z, const SmallMat& j, double drift_tol) {
  Eigen::HouseholderQR<SmallMat> qr(z);
  z = qr.householderQ() * SmallMat::Identity(z.rows(), z.cols());
  SmallMat s = z.transpose() * j * z;
  if (s.cwiseAbs().maxCoeff() > drift_tol) {
    throw Error("isotropy drift above tolerance in frame integration");
  }
  for (int iter = 0; iter < 3 && s.cwiseAbs().maxCoeff() > 1e-14; ++iter) {
    z += 0.5 * j * z * s;
    Eigen::HouseholderQR<SmallMat> re(z);
    z = re.householderQ() * SmallMat::Identity(z.rows(), z.cols());
    s = z.transpose() * j * z;
  }
}

/// One adaptive Dormand-Prince run of the frame ODE Z' = J A(x) Z from
/// x0 to x1 (either direction), re-orthonormalizing at every accepted
/// step and recording at the requested targets (ordered along the sweep).
std::vector<LagrangianFrame> integrate_frame(const HamiltonianFamily& family,
                                             const Mat& z0, double x0,
                                             const std::vector<double>& targets,
                                             const IntegrateOptions& opts) {
  const int n = family.n();
  if (n > 4) throw Error("frame integration supports n <= 4");
  const SmallMat j = symplectic_J(n);

  const SkewGradientModel& model = *family.model;
  const PulseProfile& profile = *family.profile;
  const double x_lo = profile.grid(0);
  const double x_hi = profile.grid(profile.num_nodes() - 1);
  SmallMat qd_inv = (model.q_diag.array() * model.d_diag.array()).inverse().matrix().asDiagonal();
  SmallMat qm = (model.q_diag.array() * model.m_diag.array()).matrix().asDiagonal();

  SmallMat a = SmallMat::Zero(2 * n, 2 * n);
  a.topLeftCorner(n, n) = qd_inv;
  auto fill_a = [&](double x) {
    const Mat b = (x < x_lo || x > x_hi) ? model.b_inf
                                         : model.hess_v(profile.value_at(x));
    a.bottomRightCorner(n, n) =
        b - family.epsilon * Mat::Identity(n, n) - family.lambda * Mat(qm);
  };

  SmallMat k[7], zs, z5, err;
  SmallMat z = z0;
  auto rhs = [&](double x, const SmallMat& frame, SmallMat& out) {
    fill_a(x);
    out.noalias() = j * (a * frame);
  };

  std::vector<LagrangianFrame> out;
  out.reserve(targets.size());
  double x = x0;
  size_t next = 0;
  auto hit = [&](double target) {
    return std::abs(target - x) < 1e-12 * (1.0 + std::abs(target));
  };
  auto record = [&] {
    LagrangianFrame frame;
    frame.columns = z;
    if (frame.isotropy_defect() > 1e-10) {
      throw Error("recorded frame lost isotropy");
    }
    out.push_back(std::move(frame));
  };
  while (next < targets.size() && hit(targets[next])) {
    record();
    ++next;
  }
  if (next >= targets.size()) return out;
  const double dir = targets.back() > x0 ? 1.0 : -1.0;

  double h = dir * std::max(1e-4, std::abs(targets.back() - x0) / 400.0);
  int rejects = 0;
  while (next < targets.size()) {
    const double remaining = targets[next] - x;
    if (hit(targets[next])) {
      record();
      ++next;
      continue;
    }
    if (std::abs(h) > std::abs(remaining)) h = remaining;

    rhs(x, z, k[0]);
    for (int s = 1; s < 7; ++s) {
      zs = z;
      for (int q = 0; q < s; ++q) zs += h * kA[s][q] * k[q];
      rhs(x + kC[s] * h, zs, k[s]);
    }
    z5 = z;
    err.setZero(z.rows(), z.cols());
    for (int s = 0; s < 7; ++s) {
      z5 += h * kB5[s] * k[s];
      err += h * (kB5[s] - kB4[s]) * k[s];
    }
    const double scale = opts.abs_tol + opts.rel_tol * z5.cwiseAbs().maxCoeff();
    const double err_norm = err.cwiseAbs().maxCoeff() / scale;
    if (err_norm <= 1.0) {
      x += h;
      z = z5;
      relagrangianize(z, j, 1e-8);
      rejects = 0;
      if (next < targets.size() && hit(targets[next])) {
        record();
        ++next;
      }
    } else if (++rejects > 40) {
      throw Error("step rejection cascade; the coefficient family is too stiff here");
    }
    const double factor =
        std::clamp(0.9 * std::pow(std::max(err_norm, 1e-10), -0.2), 0.2, 5.0);
    h *= factor;
    if (std::abs(h) < 1e-13 * std::abs(targets.back() - x0)) {
      throw Error("step size underflow in frame integration");
    }
  }
  return out;
}

void check_angle_steps(const FramePath& path, double max_step) {
  if (max_step <= 0.0) return;
  for (size_t k = 1; k < path.frames.size(); ++k) {
    const double step = principal_angles(path.frames[k - 1], path.frames[k]).maxCoeff();
    if (step > max_step) {
      throw Error("consecutive frames differ by " + std::to_string(step) +
                  " rad; refine the tau grid");
    }
  }
}

} // namespace

FramePath integrate_unstable(const HamiltonianFamily& family, const Vec& tau_grid,
                             const IntegrateOptions& opts) {
  family.profile->validate();
  const double x_left = family.profile->grid(0);
  if (tau_grid.size() == 0) throw Error("empty tau grid");
  std::vector<double> targets(tau_grid.data(), tau_grid.data() + tau_grid.size());
  for (size_t i = 1; i < targets.size(); ++i) {
    if (targets[i] <= targets[i - 1]) throw Error("tau grid must increase");
  }
  if (targets.front() < x_left - 1e-12) throw Error("tau grid leaves the profile domain");

  const AsymptoticSplit split = asymptotic_split(family);
  FramePath path;
  path.grid = tau_grid;
  path.direction = +1;
  path.frames = integrate_frame(family, split.v_plus.columns, x_left, targets, opts);
  check_angle_steps(path, tau_grid.size() > 2 ? opts.max_angle_step : 0.0);
  return path;
}

FramePath integrate_stable(const HamiltonianFamily& family, const Vec& tau_grid,
                           const IntegrateOptions& opts) {
  family.profile->validate();
  const double x_right = family.profile->grid(family.profile->num_nodes() - 1);
  if (tau_grid.size() == 0) throw Error("empty tau grid");
  std::vector<double> targets(tau_grid.data(), tau_grid.data() + tau_grid.size());
  for (size_t i = 1; i < targets.size(); ++i) {
    if (targets[i] <= targets[i - 1]) throw Error("tau grid must increase");
  }
  if (targets.back() > x_right + 1e-12) throw Error("tau grid leaves the profile domain");

  const AsymptoticSplit split = asymptotic_split(family);
  std::vector<double> descending(targets.rbegin(), targets.rend());
  auto frames = integrate_frame(family, split.v_minus.columns, x_right, descending, opts);

  FramePath path;
  path.grid = tau_grid;
  path.direction = -1;
  path.frames.assign(frames.rbegin(), frames.rend());
  check_angle_steps(path, tau_grid.size() > 2 ? opts.max_angle_step : 0.0);
  return path;
}

LagrangianFrame unstable_frame_at(const HamiltonianFamily& family, double tau,
                                  const IntegrateOptions& opts) {
  Vec grid(1);
  grid(0) = tau;
  return integrate_unstable(family, grid, opts).frames.front();
}

namespace {

Vec translation_solution(const HamiltonianFamily& family, double tau) {
  const SkewGradientModel& model = *family.model;
  const PulseProfile& profile = *family.profile;
  const int n = model.n;
  Vec z(2 * n);
  z.head(n) = -model.grad_v(profile.value_at(tau));
  z.tail(n) = profile.deriv_at(tau);
  return z;
}

LagrangianFrame pin_kernel_direction(const HamiltonianFamily& family, double tau,
                                     const LagrangianFrame& integrated) {
  const int n = family.n();
  const Vec z = translation_solution(family, tau).normalized();
  if (n == 1) {
    Mat cols(2, 1);
    cols.col(0) = z;
    return LagrangianFrame::from_columns(cols, 1e-6);
  }
  // Complement inside span(z, integrated): keep only directions that are
  // omega-orthogonal to the kernel.  Past the settling point the raw
  // integrated frame picks up the growing asymptotic direction, which is
  // not isotropic with z; the symplectic restriction filters it out.
  Mat universe(2 * n, n + 1);
  universe.col(0) = z;
  universe.rightCols(n) = integrated.columns;
  Eigen::JacobiSVD<Mat> thin(universe, Eigen::ComputeThinU);
  int rank = 0;
  for (int i = 0; i < thin.singularValues().size(); ++i) {
    if (thin.singularValues()(i) > 1e-10 * thin.singularValues()(0)) ++rank;
  }
  const Mat u_basis = thin.matrixU().leftCols(rank);

  const Mat j = symplectic_J(n);
  Mat constraints(2, rank);
  constraints.row(0) = ((j * z).transpose() * u_basis); // omega(z, .) = 0
  constraints.row(1) = (z.transpose() * u_basis);       // orthogonal to z
  // Before the drift zone z lies inside the integrated span and the
  // omega row vanishes identically on it; an explicit threshold keeps the
  // rank decision stable on both sides.
  Eigen::FullPivLU<Mat> lu(constraints);
  lu.setThreshold(1e-6);
  const Mat kernel_coords = lu.kernel();
  Mat candidates = u_basis * kernel_coords;
  if (candidates.cols() < n - 1) {
    throw Error("kernel pinning lost the unstable complement");
  }

  // favour the strongest directions of the integrated span
  Eigen::JacobiSVD<Mat> pick(candidates, Eigen::ComputeThinU);
  Mat cols(2 * n, n);
  cols.col(0) = z;
  cols.rightCols(n - 1) = pick.matrixU().leftCols(n - 1);
  return LagrangianFrame::from_columns(cols, 1e-5);
}

} // namespace

FramePath integrate_unstable_pinned(const HamiltonianFamily& family,
                                    const Vec& tau_grid, const IntegrateOptions& opts) {
  if (family.lambda != 0.0 || family.epsilon != 0.0) {
    throw Error("kernel pinning is only valid at lambda = eps = 0");
  }
  IntegrateOptions raw = opts;
  raw.max_angle_step = 0.0; // smoothness is checked on the pinned frames
  FramePath path = integrate_unstable(family, tau_grid, raw);
  for (int i = 0; i < tau_grid.size(); ++i) {
    path.frames[static_cast<size_t>(i)] =
        pin_kernel_direction(family, tau_grid(i), path.frames[static_cast<size_t>(i)]);
  }
  if (tau_grid.size() > 2 && opts.max_angle_step > 0.0) {
    for (size_t k = 1; k < path.frames.size(); ++k) {
      const double step =
          principal_angles(path.frames[k - 1], path.frames[k]).maxCoeff();
      if (step > opts.max_angle_step) {
        throw Error("consecutive frames differ by " + std::to_string(step) +
                    " rad; refine the tau grid");
      }
    }
  }
  return path;
}

LagrangianFrame unstable_frame_pinned_at(const HamiltonianFamily& family, double tau,
                                         const IntegrateOptions& opts) {
  Vec grid(1);
  grid(0) = tau;
  return integrate_unstable_pinned(family, grid, opts).frames.front();
}

LagrangianFrame stable_frame_at(const HamiltonianFamily& family, double tau,
                                const IntegrateOptions& opts) {
  Vec grid(1);
  grid(0) = tau;
  return integrate_stable(family, grid, opts).frames.front();
}

double evans_gap(const HamiltonianFamily& family, const IntegrateOptions& opts) {
  const LagrangianFrame stable = stable_frame_at(family, 0.0, opts);
  const LagrangianFrame unstable = unstable_frame_at(family, 0.0, opts);
  return frame_gap(stable, unstable);
}

} // namespace pulsestab
