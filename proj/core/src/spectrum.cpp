#include "pulsestab/spectrum.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <lapacke.h>

#include "pulsestab/hamiltonian.hpp"

namespace pulsestab {

namespace {

struct DiscretizationGrid {
  Vec nodes;  // interior nodes only
  double h = 0.0;
  double half_width = 0.0;
};

DiscretizationGrid interior_grid(const PulseProfile& profile, const SpectrumOptions& opts) {
  if (opts.num_intervals < 50) throw Error("grid too coarse: need at least 50 intervals");
  DiscretizationGrid g;
  g.half_width = opts.half_width > 0.0 ? opts.half_width : profile.half_width();
  g.h = 2.0 * g.half_width / opts.num_intervals;
  g.nodes = Vec(opts.num_intervals - 1);
  for (int i = 1; i < opts.num_intervals; ++i) {
    g.nodes(i - 1) = -g.half_width + i * g.h;
  }
  return g;
}

bool is_tridiagonal_symmetric(const Mat& m) {
  const double scale = m.cwiseAbs().maxCoeff();
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) return false;
  for (int i = 0; i < m.rows(); ++i) {
    for (int j = 0; j < m.cols(); ++j) {
      if (std::abs(i - j) > 1 && std::abs(m(i, j)) > 1e-14 * scale) return false;
    }
  }
  return true;
}

std::vector<std::complex<double>> dense_eigenvalues(const Mat& matrix) {
  const int m = static_cast<int>(matrix.rows());
  std::vector<std::complex<double>> out(static_cast<size_t>(m));

  if (is_tridiagonal_symmetric(matrix)) {
    std::vector<double> diag(static_cast<size_t>(m)), off(static_cast<size_t>(m - 1));
    for (int i = 0; i < m; ++i) diag[static_cast<size_t>(i)] = matrix(i, i);
    for (int i = 0; i + 1 < m; ++i) off[static_cast<size_t>(i)] = matrix(i, i + 1);
    const int info = LAPACKE_dstev(LAPACK_COL_MAJOR, 'N', m, diag.data(), off.data(),
                                   nullptr, m);
    if (info != 0) throw Error("dstev failed (info = " + std::to_string(info) + ")");
    for (int i = 0; i < m; ++i) out[static_cast<size_t>(i)] = diag[static_cast<size_t>(i)];
    return out;
  }

  const double scale = matrix.cwiseAbs().maxCoeff();
  if ((matrix - matrix.transpose()).cwiseAbs().maxCoeff() < 1e-12 * scale) {
    Mat a = matrix;
    std::vector<double> w(static_cast<size_t>(m));
    const int info = LAPACKE_dsyev(LAPACK_COL_MAJOR, 'N', 'U', m, a.data(), m, w.data());
    if (info != 0) throw Error("dsyev failed (info = " + std::to_string(info) + ")");
    for (int i = 0; i < m; ++i) out[static_cast<size_t>(i)] = w[static_cast<size_t>(i)];
    return out;
  }

  Mat a = matrix;
  std::vector<double> wr(static_cast<size_t>(m)), wi(static_cast<size_t>(m));
  const int info = LAPACKE_dgeev(LAPACK_COL_MAJOR, 'N', 'N', m, a.data(), m, wr.data(),
                                 wi.data(), nullptr, 1, nullptr, 1);
  if (info != 0) throw Error("dgeev failed (info = " + std::to_string(info) + ")");
  for (int i = 0; i < m; ++i) {
    out[static_cast<size_t>(i)] = {wr[static_cast<size_t>(i)], wi[static_cast<size_t>(i)]};
  }
  return out;
}

} // namespace

Mat discretize_L(const SkewGradientModel& model, const PulseProfile& profile,
                 const SpectrumOptions& opts) {
  model.validate();
  profile.validate();
  const DiscretizationGrid g = interior_grid(profile, opts);
  const int n = model.n;
  const int nodes = static_cast<int>(g.nodes.size());
  const int size = n * nodes;

  const Vec m_inv_sqrt = model.m_diag.cwiseSqrt().cwiseInverse();
  const Mat q = model.Q();
  // off-diagonal block M^{-1/2} D M^{-1/2} / h^2 (diagonal)
  const Vec off_block =
      (m_inv_sqrt.array() * model.d_diag.array() * m_inv_sqrt.array()).matrix() /
      (g.h * g.h);

  Mat l = Mat::Zero(size, size);
  for (int i = 0; i < nodes; ++i) {
    const double x = g.nodes(i);
    Mat b = (std::abs(x) > profile.half_width()) ? model.b_inf
                                                 : model.hess_v(profile.value_at(x));
    Mat center = m_inv_sqrt.asDiagonal() * (q * b) * m_inv_sqrt.asDiagonal();
    center -= 2.0 * Mat(off_block.asDiagonal());
    l.block(i * n, i * n, n, n) = center;
    if (i > 0) l.block(i * n, (i - 1) * n, n, n) = off_block.asDiagonal();
    if (i + 1 < nodes) l.block(i * n, (i + 1) * n, n, n) = off_block.asDiagonal();
  }
  return l;
}

SpectrumReport eigen_report(const Mat& matrix, const SkewGradientModel& model,
                            const PulseProfile& profile, const SpectrumOptions& opts) {
  const DiscretizationGrid g = interior_grid(profile, opts);
  const int n = model.n;
  const int nodes = static_cast<int>(g.nodes.size());
  if (matrix.rows() != n * nodes) throw Error("matrix size disagrees with the options");

  SpectrumReport report;
  report.eigenvalues = dense_eigenvalues(matrix);
  std::sort(report.eigenvalues.begin(), report.eigenvalues.end(),
            [](const std::complex<double>& a, const std::complex<double>& b) {
              return a.real() != b.real() ? a.real() > b.real() : a.imag() < b.imag();
            });

  const double scale = matrix.cwiseAbs().maxCoeff();
  report.re_tol = opts.tol_scale * scale;
  report.im_tol = opts.tol_scale * scale;

  // residual of the translation mode: v = M^{1/2} w0' sampled on the grid
  {
    const Vec m_sqrt = model.m_diag.cwiseSqrt();
    Vec v(n * nodes);
    for (int i = 0; i < nodes; ++i) {
      v.segment(i * n, n) =
          (m_sqrt.array() * profile.deriv_at(g.nodes(i)).array()).matrix();
    }
    const double norm = v.norm();
    if (norm < 1e-14) throw Error("translation mode vanishes on the grid");
    report.zero_mode_error = (matrix * v).norm() / norm;
  }

  // The discrete translation eigenvalue sits O(h^2) from zero, so the
  // cluster radius tracks the measured residual rather than only the
  // pulse-solver tolerance.
  report.zero_cluster_radius =
      std::max(50.0 * opts.pulse_tol, 4.0 * report.zero_mode_error);

  int cluster = 0;
  report.n_plus = 0;
  for (const auto& ev : report.eigenvalues) {
    if (std::abs(ev) < report.zero_cluster_radius) {
      ++cluster;
      continue;
    }
    if (std::abs(ev.imag()) < report.im_tol && ev.real() > report.re_tol) {
      ++report.n_plus;
    }
  }
  report.zero_simple = cluster == 1;

  {
    const HypothesisReport hyp = check_hypotheses(model, profile);
    report.ess_bound_ok = essential_spectrum_ok(
        model, {0.0, 0.5 * hyp.lambda_hat, hyp.lambda_hat});
  }
  report.sufficiency_ok = sufficiency_check(model, profile, opts).ok;
  return report;
}

bool essential_spectrum_ok(const SkewGradientModel& model,
                           const std::vector<double>& lambda_probes) {
  model.validate();
  PulseProfile unused;
  for (double lambda : lambda_probes) {
    if (lambda < 0.0) throw Error("negative lambda probe rejected");
    HamiltonianFamily family;
    family.model = &model;
    family.profile = &unused; // asymptotic_split only touches b_inf
    family.lambda = lambda;
    family.epsilon = 0.0;
    try {
      (void)asymptotic_split(family);
    } catch (const Error&) {
      return false;
    }
  }
  return true;
}

SufficiencyDetails sufficiency_check(const SkewGradientModel& model,
                                     const PulseProfile& profile,
                                     const SpectrumOptions& opts) {
  const int n = model.n;
  const int n_inhib = n - model.activators;
  SufficiencyDetails details;
  if (model.fhn.has_value()) {
    details.closed_form_applicable = true;
    details.closed_form_ok = model.fhn->tau < model.fhn->gamma * model.fhn->gamma;
  }
  if (n_inhib == 0) {
    // no inhibitor block: conditions hold vacuously
    details.ok = true;
    details.min_eig_negG2 = std::numeric_limits<double>::infinity();
    return details;
  }

  const Mat l = discretize_L(model, profile, opts);
  const int nodes = static_cast<int>(l.rows()) / n;

  // G = -Q L, reordered into activator block then inhibitor block
  Mat q_big = Mat::Zero(l.rows(), l.cols());
  for (int i = 0; i < nodes; ++i) {
    q_big.block(i * n, i * n, n, n) = model.Q();
  }
  const Mat g = -q_big * l;

  std::vector<int> act_idx, inh_idx;
  for (int i = 0; i < nodes; ++i) {
    for (int c = 0; c < n; ++c) {
      (c < model.activators ? act_idx : inh_idx).push_back(i * n + c);
    }
  }
  const int na = static_cast<int>(act_idx.size());
  const int ni = static_cast<int>(inh_idx.size());
  Mat g2(ni, ni), g3(na, ni);
  for (int r = 0; r < ni; ++r) {
    for (int c = 0; c < ni; ++c) {
      g2(r, c) = g(inh_idx[static_cast<size_t>(r)], inh_idx[static_cast<size_t>(c)]);
    }
  }
  for (int r = 0; r < na; ++r) {
    for (int c = 0; c < ni; ++c) {
      g3(r, c) = g(act_idx[static_cast<size_t>(r)], inh_idx[static_cast<size_t>(c)]);
    }
  }

  const Mat neg_g2 = 0.5 * ((-g2) + (-g2).transpose());
  Eigen::SelfAdjointEigenSolver<Mat> es(neg_g2, Eigen::EigenvaluesOnly);
  details.min_eig_negG2 = es.eigenvalues().minCoeff();
  const double g2_scale = neg_g2.cwiseAbs().maxCoeff();
  if (details.min_eig_negG2 < 1e-12 * g2_scale) {
    throw Error("inhibitor block -G2 is numerically singular");
  }

  // largest eigenvalue of G3 (-G2)^{-2} G3^T as sigma_max((-G2)^{-1} G3^T)^2
  Eigen::LDLT<Mat> ldlt(neg_g2);
  if (ldlt.info() != Eigen::Success) throw Error("factorization of -G2 failed");
  const Mat x = ldlt.solve(g3.transpose()); // ni x na
  // power iteration on X^T X
  Vec v = Vec::Ones(na).normalized();
  double sigma2 = 0.0;
  for (int iter = 0; iter < 80; ++iter) {
    Vec w = x.transpose() * (x * v);
    const double norm = w.norm();
    if (norm < 1e-30) break;
    w /= norm;
    const double estimate = norm;
    if (std::abs(estimate - sigma2) < 1e-12 * std::max(1.0, estimate)) {
      sigma2 = estimate;
      break;
    }
    sigma2 = estimate;
    v = w;
  }
  details.coupling_norm = sigma2;

  details.ok = details.min_eig_negG2 > 0.0 && details.coupling_norm < 1.0 - 1e-8;
  return details;
}

} // namespace pulsestab
