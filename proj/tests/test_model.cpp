#include <doctest.h>
#include <random>

#include "fixtures.hpp"
#include "pulsestab/model.hpp"
#include "pulsestab/pulse.hpp"

using namespace pulsestab;

namespace {

// central finite difference of grad_v, column j
Vec grad_fd_column(const SkewGradientModel& model, const Vec& w, int j, double h) {
  Vec wp = w, wm = w;
  wp(j) += h;
  wm(j) -= h;
  return (model.grad_v(wp) - model.grad_v(wm)) / (2.0 * h);
}

} // namespace

TEST_CASE("FHN construction matches the stated matrices") {
  const SkewGradientModel model = build_fhn(1.0, 2.0, 1.0, 0.3);
  CHECK(model.m_diag(0) == 1.0);
  CHECK(model.m_diag(1) == 2.0);
  CHECK(model.q_diag(0) == 1.0);
  CHECK(model.q_diag(1) == -1.0);
  CHECK(model.b_inf(0, 0) == doctest::Approx(-0.3));
  CHECK(model.b_inf(0, 1) == doctest::Approx(-1.0));
  CHECK(model.b_inf(1, 0) == doctest::Approx(-1.0));
  CHECK(model.b_inf(1, 1) == doctest::Approx(1.0));

  const SkewGradientModel identity_m = build_fhn(1.0, 1.0, 1.0, 0.5);
  CHECK(identity_m.M().isIdentity(1e-15));
}

TEST_CASE("FHN rejects bad parameters by name") {
  CHECK_THROWS_WITH_AS(build_fhn(-1.0, 1.0, 1.0, 0.5),
                       doctest::Contains("'d'"), Error);
  CHECK_THROWS_WITH_AS(build_fhn(1.0, 0.0, 1.0, 0.5),
                       doctest::Contains("'tau'"), Error);
  CHECK_THROWS_WITH_AS(build_fhn(1.0, 1.0, -2.0, 0.5),
                       doctest::Contains("'gamma'"), Error);
  CHECK_THROWS_WITH_AS(build_fhn(1.0, 1.0, 1.0, 1.5),
                       doctest::Contains("'beta'"), Error);
}

TEST_CASE("FHN Hessian agrees with finite differences of the gradient") {
  const SkewGradientModel model = build_fhn(1.0, 2.0, 1.0, 0.3);
  const Vec w = (Vec(2) << 0.2, 0.1).finished();
  const Mat h = model.hess_v(w);
  for (int j = 0; j < 2; ++j) {
    const Vec fd = grad_fd_column(model, w, j, 1e-6);
    for (int i = 0; i < 2; ++i) {
      CHECK(h(i, j) == doctest::Approx(fd(i)).epsilon(1e-6));
    }
  }
}

TEST_CASE("scalar bistable model") {
  const SkewGradientModel model = build_scalar_bistable();
  CHECK(model.b_inf(0, 0) == doctest::Approx(-1.0));
  CHECK(model.q_diag(0) == 1.0);
  CHECK(model.n - model.activators == 0); // no inhibitor subspace
  const Vec w = Vec::Constant(1, 1.5);
  CHECK(model.grad_v(w)(0) == doctest::Approx(0.75));
}

TEST_CASE("Hessian symmetry sampled at random points") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  const SkewGradientModel model = build_fhn(0.8, 1.5, 2.0, 0.4);
  for (int trial = 0; trial < 100; ++trial) {
    const Vec w = (Vec(2) << unit(rng), unit(rng)).finished();
    const Mat h = model.hess_v(w);
    CHECK((h - h.transpose()).cwiseAbs().maxCoeff() < 1e-14);
    for (int j = 0; j < 2; ++j) {
      const Vec fd = grad_fd_column(model, w, j, 1e-5);
      for (int i = 0; i < 2; ++i) {
        CHECK(h(i, j) == doctest::Approx(fd(i)).epsilon(1e-5));
      }
    }
  }
}

TEST_CASE("activator-inhibitor splitting of <Q B(x) v, v> has no cross terms") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  const double gamma = 1.7, beta = 0.35;
  const SkewGradientModel model = build_fhn(1.0, 1.0, gamma, beta);
  for (int trial = 0; trial < 50; ++trial) {
    const Vec w = (Vec(2) << unit(rng), unit(rng)).finished();
    const Vec v = (Vec(2) << unit(rng), unit(rng)).finished();
    const double quad = v.dot(model.Q() * model.hess_v(w) * v);
    const double fprime = model.hess_v(w)(0, 0);
    const double expected =
        fprime * v(0) * v(0) - (gamma + 3.0 * w(1) * w(1)) * v(1) * v(1);
    CHECK(quad == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("hypothesis margins for FHN") {
  const double beta = 0.3, gamma = 1.0;
  const SkewGradientModel model = build_fhn(1.0, 1.0, gamma, beta);
  const PulseProfile profile = [] {
    // small synthetic two-component profile; margins only sample B(x)
    PulseProfile p;
    const int m = 41;
    p.grid = Vec::LinSpaced(m, -10.0, 10.0);
    p.w = Mat::Zero(m, 2);
    p.w_prime = Mat::Zero(m, 2);
    for (int i = 0; i < m; ++i) {
      p.w(i, 0) = 0.4 * std::exp(-p.grid(i) * p.grid(i) / 4.0);
      p.w(i, 1) = 0.1 * std::exp(-p.grid(i) * p.grid(i) / 4.0);
      p.w_prime(i, 0) = -0.5 * p.grid(i) * p.w(i, 0);
      p.w_prime(i, 1) = -0.5 * p.grid(i) * p.w(i, 1);
    }
    p.decay_rate = 0.5;
    return p;
  }();

  const HypothesisReport report = check_hypotheses(model, profile);
  CHECK(report.h1_holds);
  CHECK(report.c2 == doctest::Approx(std::min(beta, gamma))); // sym(QB(inf)) = diag(-b,-g)
  CHECK(report.h2_holds);
  REQUIRE(report.c3_h2.has_value());
  CHECK(*report.c3_h2 == doctest::Approx(gamma)); // min over x of gamma + 3 v^2
  CHECK(report.lambda_hat == doctest::Approx(report.c1 / model.l()));
  CHECK(report.epsilon_max == doctest::Approx(0.5 * std::min(report.c2, *report.c3_h2)));
}

TEST_CASE("hypothesis margins for the scalar model") {
  const SkewGradientModel model = build_scalar_bistable();
  const PulseProfile profile = fixtures::analytic_scalar_profile(20.0, 400);
  const HypothesisReport report = check_hypotheses(model, profile);
  CHECK(report.h1_holds);
  CHECK(report.c2 == doctest::Approx(1.0));
  CHECK(report.h2_holds); // vacuous: no inhibitors
  CHECK_FALSE(report.c3_h2.has_value());
  // |Q B(x)| peaks at 3 sech^2(0) - 1 = 2; the 5% tail allowance on top
  CHECK(report.c1 == doctest::Approx(2.1).epsilon(1e-3));
  CHECK(report.epsilon_max == doctest::Approx(0.5 * report.c2));
}

TEST_CASE("broken rest-state margin is reported") {
  // gradient-type scalar model with unstable rest state: grad V = u + u^2
  SkewGradientModel model = build_scalar_bistable();
  model.grad_v = [](const Vec& w) {
    Vec g(1);
    g(0) = w(0) + w(0) * w(0);
    return g;
  };
  model.hess_v = [](const Vec& w) {
    Mat h(1, 1);
    h(0, 0) = 1.0 + 2.0 * w(0);
    return h;
  };
  model.b_inf = model.hess_v(Vec::Zero(1));
  const PulseProfile profile = fixtures::analytic_scalar_profile(10.0, 100);
  const HypothesisReport report = check_hypotheses(model, profile);
  CHECK_FALSE(report.h1_holds);
  CHECK(!report.violation.empty());
}

TEST_CASE("polynomial model reproduces the scalar bistable potential") {
  // V(u) = u^3/3 - u^2/2, so grad V = u^2 - u
  std::vector<PolynomialTerm> terms;
  terms.push_back({1.0 / 3.0, {3}});
  terms.push_back({-0.5, {2}});
  const SkewGradientModel poly =
      build_polynomial_model(1, 1, Vec::Ones(1), Vec::Ones(1), terms);
  const SkewGradientModel reference = build_scalar_bistable();
  for (double u : {-0.5, 0.0, 0.3, 1.5}) {
    const Vec w = Vec::Constant(1, u);
    CHECK(poly.grad_v(w)(0) == doctest::Approx(reference.grad_v(w)(0)));
    CHECK(poly.hess_v(w)(0, 0) == doctest::Approx(reference.hess_v(w)(0, 0)));
  }
}
