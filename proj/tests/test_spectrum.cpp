#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <doctest.h>

#include "fixtures.hpp"
#include "pulsestab/spectrum.hpp"

using namespace pulsestab;

namespace {

const PulseProfile& scalar_profile() {
  static const PulseProfile profile = fixtures::analytic_scalar_profile(30.0, 6000);
  return profile;
}

double nearest_real_eigenvalue(const SpectrumReport& report, double target) {
  double best = 1e300;
  for (const auto& ev : report.eigenvalues) {
    if (std::abs(ev.imag()) > 1e-8) continue;
    if (std::abs(ev.real() - target) < std::abs(best - target)) best = ev.real();
  }
  return best;
}

} // namespace

TEST_CASE("scalar discretization is symmetric tridiagonal with the right potential") {
  const SkewGradientModel model = build_scalar_bistable();
  SpectrumOptions opts;
  opts.num_intervals = 200;
  const Mat l = discretize_L(model, scalar_profile(), opts);
  REQUIRE(l.rows() == 199);
  CHECK((l - l.transpose()).cwiseAbs().maxCoeff() < 1e-12);
  for (int i = 0; i + 3 < l.rows(); ++i) {
    CHECK(l(i, i + 2) == 0.0);
    CHECK(l(i, i + 3) == 0.0);
  }
  // interior diagonal carries -2/h^2 + 3 sech^2(x/2) - 1
  const double h = 60.0 / 200.0;
  const double x_mid = -30.0 + 100 * h;
  const double expected =
      -2.0 / (h * h) + 3.0 / std::pow(std::cosh(x_mid / 2.0), 2) - 1.0;
  CHECK(l(99, 99) == doctest::Approx(expected).epsilon(1e-9));

  SpectrumOptions coarse;
  coarse.num_intervals = 30;
  CHECK_THROWS_WITH_AS(discretize_L(model, scalar_profile(), coarse),
                       doctest::Contains("coarse"), Error);
}

TEST_CASE("FHN discretization is non-symmetric") {
  const SkewGradientModel model = fixtures::fhn_model_b(51.0);
  SpectrumOptions opts;
  opts.num_intervals = 120;
  const Mat l = discretize_L(model, fixtures::fhn_profile_b(), opts);
  CHECK((l - l.transpose()).cwiseAbs().maxCoeff() > 1e-3);
}

TEST_CASE("constant-coefficient operator matches the Dirichlet shift spectrum") {
  // hess_v constant -1: L = d^2/dx^2 - 1 on [-X, X] with Dirichlet ends
  SkewGradientModel model = build_scalar_bistable();
  model.grad_v = [](const Vec& w) { return Vec(-w); };
  model.hess_v = [](const Vec&) { return Mat::Constant(1, 1, -1.0); };
  model.b_inf = Mat::Constant(1, 1, -1.0);

  SpectrumOptions opts;
  opts.num_intervals = 2000;
  const double half_width = 30.0;
  const Mat l = discretize_L(model, scalar_profile(), opts);
  std::vector<std::complex<double>> eigs;
  {
    Eigen::SelfAdjointEigenSolver<Mat> es(l, Eigen::EigenvaluesOnly);
    for (int i = 0; i < es.eigenvalues().size(); ++i) eigs.push_back(es.eigenvalues()(i));
  }
  std::sort(eigs.begin(), eigs.end(),
            [](auto a, auto b) { return a.real() > b.real(); });
  for (int k = 1; k <= 4; ++k) {
    const double exact = -1.0 - std::pow(k * M_PI / (2.0 * half_width), 2);
    CHECK(eigs[static_cast<size_t>(k - 1)].real() ==
          doctest::Approx(exact).epsilon(1e-4));
  }
}

TEST_CASE("scalar pulse spectrum contains {1.25, 0, -0.75}") {
  const SkewGradientModel model = build_scalar_bistable();
  SpectrumOptions opts;
  opts.num_intervals = 2000;
  const Mat l = discretize_L(model, scalar_profile(), opts);
  const SpectrumReport report = eigen_report(l, model, scalar_profile(), opts);

  CHECK(std::abs(nearest_real_eigenvalue(report, 1.25) - 1.25) < 2e-3);
  CHECK(std::abs(nearest_real_eigenvalue(report, 0.0)) < 2e-3);
  CHECK(std::abs(nearest_real_eigenvalue(report, -0.75) + 0.75) < 2e-3);

  CHECK(report.n_plus == 1);
  CHECK(report.zero_simple);
  CHECK(report.ess_bound_ok);
  CHECK(report.sufficiency_ok); // no inhibitor block: vacuous
  CHECK(report.zero_mode_error < 1e-3);
}

TEST_CASE("doubling the grid shrinks the eigenvalue error by the scheme order") {
  const SkewGradientModel model = build_scalar_bistable();
  auto error_at = [&](int n_intervals) {
    SpectrumOptions opts;
    opts.num_intervals = n_intervals;
    const Mat l = discretize_L(model, scalar_profile(), opts);
    const SpectrumReport report = eigen_report(l, model, scalar_profile(), opts);
    return std::max(std::abs(nearest_real_eigenvalue(report, 1.25) - 1.25),
                    std::abs(nearest_real_eigenvalue(report, -0.75) + 0.75));
  };
  const double coarse = error_at(500);
  const double fine = error_at(1000);
  CHECK(coarse / fine > 3.5);
}

TEST_CASE("real eigenvalues agree with the Evans-gap zeros") {
  // Richardson-extrapolated interior eigenvalue against the analytically
  // located zero of the Evans gap (grid-converged cross-validation)
  const SkewGradientModel model = build_scalar_bistable();
  auto eigenvalue_at = [&](int n_intervals) {
    SpectrumOptions opts;
    opts.num_intervals = n_intervals;
    const Mat l = discretize_L(model, scalar_profile(), opts);
    const SpectrumReport report = eigen_report(l, model, scalar_profile(), opts);
    return nearest_real_eigenvalue(report, 1.25);
  };
  const double coarse = eigenvalue_at(2000);
  const double fine = eigenvalue_at(4000);
  const double extrapolated = (4.0 * fine - coarse) / 3.0;
  // the Evans side of this bijection is pinned at 1.25 in the frame tests
  CHECK(std::abs(extrapolated - 1.25) < 1e-4);
}

TEST_CASE("essential spectrum probes") {
  const SkewGradientModel fhn = fixtures::fhn_model_b(51.0);
  const HypothesisReport hyp = check_hypotheses(fhn, fixtures::fhn_profile_b());
  CHECK(essential_spectrum_ok(fhn, {0.0, 0.5 * hyp.lambda_hat, hyp.lambda_hat}));

  SkewGradientModel broken = build_scalar_bistable();
  broken.b_inf = Mat::Constant(1, 1, 1.0);
  CHECK_FALSE(essential_spectrum_ok(broken, {0.0}));

  CHECK_THROWS_WITH_AS(essential_spectrum_ok(fhn, {-0.5}),
                       doctest::Contains("negative lambda"), Error);
}

TEST_CASE("sufficiency conditions for FHN") {
  SpectrumOptions opts;
  opts.num_intervals = 700;

  // gamma = 10: tau = 51 passes (tau < gamma^2), tau = 153 fails
  {
    const SkewGradientModel model = fixtures::fhn_model_b(51.0);
    const SufficiencyDetails details =
        sufficiency_check(model, fixtures::fhn_profile_b(), opts);
    CHECK(details.ok);
    CHECK(details.closed_form_applicable);
    CHECK(details.closed_form_ok);
    CHECK(details.min_eig_negG2 > 0.0);
    CHECK(details.coupling_norm < 1.0);
    // -G2 >= gamma/tau in form sense
    CHECK(details.min_eig_negG2 >= 10.0 / 51.0 - 1e-9);
    // coupling norm is bounded by tau/gamma^2
    CHECK(details.coupling_norm <= 51.0 / 100.0 + 1e-9);
  }
  {
    const SkewGradientModel model = fixtures::fhn_model_b(153.0);
    const SufficiencyDetails details =
        sufficiency_check(model, fixtures::fhn_profile_b(), opts);
    CHECK_FALSE(details.ok);
    CHECK_FALSE(details.closed_form_ok); // tau > gamma^2
    CHECK(details.coupling_norm > 1.0);
  }
}

TEST_CASE("decoupled model passes the sufficiency check through -G2 alone") {
  // V(u, v) = u^3/3 - u^2/2 + v^2: no activator-inhibitor coupling
  std::vector<PolynomialTerm> terms;
  terms.push_back({1.0 / 3.0, {3, 0}});
  terms.push_back({-0.5, {2, 0}});
  terms.push_back({1.0, {0, 2}});
  const SkewGradientModel model =
      build_polynomial_model(2, 1, Vec::Ones(2), Vec::Ones(2), terms);

  PulseProfile profile;
  const PulseProfile& scalar = scalar_profile();
  profile.grid = scalar.grid;
  profile.w = Mat::Zero(scalar.num_nodes(), 2);
  profile.w_prime = Mat::Zero(scalar.num_nodes(), 2);
  profile.w.col(0) = scalar.w.col(0);
  profile.w_prime.col(0) = scalar.w_prime.col(0);
  profile.decay_rate = 1.0;

  SpectrumOptions opts;
  opts.num_intervals = 400;
  const SufficiencyDetails details = sufficiency_check(model, profile, opts);
  CHECK(details.ok);
  CHECK(details.coupling_norm < 1e-10);
  CHECK_FALSE(details.closed_form_applicable);
}
