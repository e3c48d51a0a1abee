#include "pulsestab/model.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "pulsestab/pulse.hpp"

namespace pulsestab {

namespace {

void require_positive(double value, const char* name) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    throw Error(std::string("parameter '") + name + "' must be positive");
  }
}

Mat symmetric_part(const Mat& a) { return 0.5 * (a + a.transpose()); }

} // namespace

void SkewGradientModel::validate() const {
  if (n < 1) throw Error("model dimension must be >= 1");
  if (activators < 1 || activators > n) {
    throw Error("activator count must satisfy 1 <= j <= n");
  }
  if (m_diag.size() != n || d_diag.size() != n || q_diag.size() != n) {
    throw Error("diagonal sizes disagree with the model dimension");
  }
  if (m_diag.minCoeff() <= 0.0) throw Error("M must have positive diagonal");
  if (d_diag.minCoeff() <= 0.0) throw Error("D must have positive diagonal");
  for (int i = 0; i < n; ++i) {
    const double expected = i < activators ? 1.0 : -1.0;
    if (q_diag(i) != expected) {
      throw Error("Q must equal diag(Id_j, -Id_{n-j})");
    }
  }
  if (!grad_v || !hess_v) throw Error("grad_v/hess_v callables missing");
  if (b_inf.rows() != n || b_inf.cols() != n) {
    throw Error("b_inf has wrong dimensions");
  }
  if ((b_inf - b_inf.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
    throw Error("b_inf must be symmetric");
  }
}

SkewGradientModel build_fhn(double d, double tau, double gamma, double beta) {
  require_positive(d, "d");
  require_positive(tau, "tau");
  require_positive(gamma, "gamma");
  require_positive(beta, "beta");
  if (beta >= 1.0) throw Error("parameter 'beta' must lie in (0, 1)");

  SkewGradientModel model;
  model.n = 2;
  model.activators = 1;
  model.m_diag = (Vec(2) << 1.0, tau).finished();
  model.d_diag = (Vec(2) << d, 1.0).finished();
  model.q_diag = (Vec(2) << 1.0, -1.0).finished();

  // V(u,v) = gamma v^2/2 + v^4/4 - uv - u^4/4 + (1+beta) u^3/3 - beta u^2/2
  model.grad_v = [beta, gamma](const Vec& w) {
    const double u = w(0), v = w(1);
    Vec g(2);
    g(0) = -u * u * u + (1.0 + beta) * u * u - beta * u - v;
    g(1) = gamma * v + v * v * v - u;
    return g;
  };
  model.hess_v = [beta, gamma](const Vec& w) {
    const double u = w(0), v = w(1);
    Mat h(2, 2);
    h(0, 0) = -3.0 * u * u + 2.0 * (1.0 + beta) * u - beta; // f'(u)
    h(0, 1) = -1.0;
    h(1, 0) = -1.0;
    h(1, 1) = gamma + 3.0 * v * v;
    return h;
  };
  model.b_inf = model.hess_v(Vec::Zero(2));
  model.fhn = FhnParams{d, tau, gamma, beta};
  model.validate();
  return model;
}

SkewGradientModel build_scalar_bistable() {
  SkewGradientModel model;
  model.n = 1;
  model.activators = 1;
  model.m_diag = Vec::Ones(1);
  model.d_diag = Vec::Ones(1);
  model.q_diag = Vec::Ones(1);
  model.grad_v = [](const Vec& w) {
    Vec g(1);
    g(0) = w(0) * w(0) - w(0);
    return g;
  };
  model.hess_v = [](const Vec& w) {
    Mat h(1, 1);
    h(0, 0) = 2.0 * w(0) - 1.0;
    return h;
  };
  model.b_inf = model.hess_v(Vec::Zero(1));
  model.validate();
  return model;
}

SkewGradientModel build_polynomial_model(int n, int activators,
                                         const Vec& m_diag, const Vec& d_diag,
                                         const std::vector<PolynomialTerm>& terms) {
  for (const auto& term : terms) {
    if (static_cast<int>(term.exponents.size()) != n) {
      throw Error("polynomial term exponent list must have one entry per component");
    }
    for (int e : term.exponents) {
      if (e < 0) throw Error("polynomial exponents must be non-negative");
    }
  }

  auto power = [](double x, int e) {
    double r = 1.0;
    for (int k = 0; k < e; ++k) r *= x;
    return r;
  };

  SkewGradientModel model;
  model.n = n;
  model.activators = activators;
  model.m_diag = m_diag;
  model.d_diag = d_diag;
  model.q_diag = Vec::Ones(n);
  for (int i = activators; i < n; ++i) model.q_diag(i) = -1.0;

  model.grad_v = [terms, n, power](const Vec& w) {
    Vec g = Vec::Zero(n);
    for (const auto& term : terms) {
      for (int i = 0; i < n; ++i) {
        const int ei = term.exponents[static_cast<size_t>(i)];
        if (ei == 0) continue;
        double value = term.coeff * ei;
        for (int k = 0; k < n; ++k) {
          const int ek = term.exponents[static_cast<size_t>(k)];
          value *= power(w(k), k == i ? ek - 1 : ek);
        }
        g(i) += value;
      }
    }
    return g;
  };
  model.hess_v = [terms, n, power](const Vec& w) {
    Mat h = Mat::Zero(n, n);
    for (const auto& term : terms) {
      for (int i = 0; i < n; ++i) {
        for (int j = i; j < n; ++j) {
          const int ei = term.exponents[static_cast<size_t>(i)];
          const int ej = term.exponents[static_cast<size_t>(j)];
          double factor;
          if (i == j) {
            if (ei < 2) continue;
            factor = static_cast<double>(ei) * (ei - 1);
          } else {
            if (ei < 1 || ej < 1) continue;
            factor = static_cast<double>(ei) * ej;
          }
          double value = term.coeff * factor;
          for (int k = 0; k < n; ++k) {
            int ek = term.exponents[static_cast<size_t>(k)];
            if (k == i) ek -= (i == j) ? 2 : 1;
            if (k == j && i != j) ek -= 1;
            value *= power(w(k), ek);
          }
          h(i, j) += value;
          if (i != j) h(j, i) += value;
        }
      }
    }
    return h;
  };
  model.b_inf = model.hess_v(Vec::Zero(n));
  model.validate();
  return model;
}

HypothesisReport check_hypotheses(const SkewGradientModel& model,
                                  const PulseProfile& profile) {
  model.validate();
  profile.validate();
  if (profile.n() != model.n) {
    throw Error("profile dimension disagrees with the model");
  }

  HypothesisReport report;
  const Mat q = model.Q();

  // Margin of the rest state: sym(Q B(inf)) must be negative definite.
  {
    Eigen::SelfAdjointEigenSolver<Mat> es(symmetric_part(q * model.b_inf));
    const double top = es.eigenvalues().maxCoeff();
    report.h1_holds = top < 0.0;
    report.c2 = std::abs(top);
    if (!report.h1_holds) {
      int which = 0;
      es.eigenvalues().maxCoeff(&which);
      report.violation = "sym(Q B(inf)) is not negative definite (eigenvalue " +
                         std::to_string(top) + ")";
      (void)which;
    }
  }

  // Inhibitor-block positivity of B(x) along the pulse and at the limit.
  const int n_inhib = model.n - model.activators;
  if (n_inhib == 0) {
    report.h2_holds = true; // no inhibitor subspace: vacuous
  } else {
    double min_eig = std::numeric_limits<double>::infinity();
    double min_pos = 0.0;
    auto scan = [&](const Mat& b, double where) {
      const Mat block = b.bottomRightCorner(n_inhib, n_inhib);
      Eigen::SelfAdjointEigenSolver<Mat> es(symmetric_part(block));
      const double low = es.eigenvalues().minCoeff();
      if (low < min_eig) {
        min_eig = low;
        min_pos = where;
      }
    };
    for (int i = 0; i < profile.num_nodes(); ++i) {
      scan(model.hess_v(profile.w.row(i).transpose()), profile.grid(i));
    }
    scan(model.b_inf, std::numeric_limits<double>::infinity());
    report.h2_holds = min_eig > 0.0;
    report.c3_h2 = min_eig;
    if (!report.h2_holds) {
      if (!report.violation.empty()) report.violation += "; ";
      report.violation += "inhibitor block of B(x) not positive definite near x = " +
                          std::to_string(min_pos);
    }
  }

  // Global bound c1 on |<Q B(x) v, v>|: grid maximum of the spectral norm
  // of sym(Q B(x)), with a 5% allowance for the unsampled tails (the tails
  // decay towards B(inf), which is included in the scan).
  {
    double c1 = 0.0;
    auto scan = [&](const Mat& b) {
      Eigen::SelfAdjointEigenSolver<Mat> es(symmetric_part(q * b));
      c1 = std::max(c1, es.eigenvalues().cwiseAbs().maxCoeff());
    };
    for (int i = 0; i < profile.num_nodes(); ++i) {
      scan(model.hess_v(profile.w.row(i).transpose()));
    }
    scan(model.b_inf);
    report.c1 = 1.05 * c1;
  }

  report.lambda_hat = report.c1 / model.l();
  if (report.c3_h2.has_value()) {
    report.epsilon_max = 0.5 * std::min(report.c2, *report.c3_h2);
  } else {
    report.epsilon_max = 0.5 * report.c2;
  }
  return report;
}

} // namespace pulsestab
