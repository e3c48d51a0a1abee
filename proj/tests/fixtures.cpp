#include "fixtures.hpp"

#include <string>

#include <Eigen/Dense>
#include <cmath>

namespace fixtures {

double scalar_pulse(double x) {
  const double s = 1.0 / std::cosh(x / 2.0);
  return 1.5 * s * s;
}

double scalar_pulse_prime(double x) {
  const double s = 1.0 / std::cosh(x / 2.0);
  return -1.5 * s * s * std::tanh(x / 2.0);
}

PulseProfile analytic_scalar_profile(double half_width, int num_intervals) {
  PulseProfile profile;
  const int m = num_intervals + 1;
  profile.grid = Vec(m);
  profile.w = Mat(m, 1);
  profile.w_prime = Mat(m, 1);
  const double h = 2.0 * half_width / num_intervals;
  for (int i = 0; i < m; ++i) {
    const double x = -half_width + i * h;
    profile.grid(i) = x;
    profile.w(i, 0) = scalar_pulse(x);
    profile.w_prime(i, 0) = scalar_pulse_prime(x);
  }
  profile.residual_norm = 0.0;
  profile.decay_rate = 1.0;
  return profile;
}

const PulseProfile& solved_scalar_profile() {
  static const PulseProfile profile = [] {
    pulsestab::PulseSolveOptions opts;
    opts.half_width = 30.0;
    opts.num_intervals = 4000;
    opts.tol = 1e-11;
    return pulsestab::solve_pulse(pulsestab::build_scalar_bistable(), opts);
  }();
  return profile;
}

FhnFixture fhn_fixture_a() { return {0.0115, 11.705, 0.28}; }
FhnFixture fhn_fixture_b() { return {1.0, 10.0, 0.1}; }

SkewGradientModel fhn_model_a(double tau) {
  const FhnFixture f = fhn_fixture_a();
  return pulsestab::build_fhn(f.d, tau, f.gamma, f.beta);
}

SkewGradientModel fhn_model_b(double tau) {
  const FhnFixture f = fhn_fixture_b();
  return pulsestab::build_fhn(f.d, tau, f.gamma, f.beta);
}

const PulseProfile& fhn_profile_a() {
  static const PulseProfile profile = [] {
    // shipped seed profile, re-polished against the model at load time
    const PulseProfile seed =
        pulsestab::load_profile(std::string(PULSESTAB_TEST_DATA_DIR) +
                                "/fhn_stable_seed.csv");
    const FhnFixture f = fhn_fixture_a();
    pulsestab::PulseSolveOptions opts;
    opts.half_width = 12.0;
    opts.num_intervals = 3200;
    opts.tol = 1e-10;
    opts.tail_tol = 1e-7;
    // tau is absent from the standing-wave equation; any value works here
    return pulsestab::solve_pulse(pulsestab::build_fhn(f.d, 1.0, f.gamma, f.beta),
                                  opts, &seed);
  }();
  return profile;
}

const PulseProfile& fhn_profile_b() {
  static const PulseProfile profile = [] {
    const FhnFixture f = fhn_fixture_b();
    pulsestab::PulseSolveOptions opts;
    opts.half_width = 38.0; // slow tail rate ~ 0.45 for these parameters
    opts.num_intervals = 5000;
    opts.tol = 1e-10;
    opts.tail_tol = 1e-6;
    return pulsestab::solve_pulse(pulsestab::build_fhn(f.d, 1.0, f.gamma, f.beta),
                                  opts);
  }();
  return profile;
}

LagrangianFrame random_lagrangian(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXcd z(n, n);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) z(r, c) = {gauss(rng), gauss(rng)};
  }
  // unitary factor of a complex Gaussian: Haar on U(n)
  Eigen::HouseholderQR<Eigen::MatrixXcd> qr(z);
  Eigen::MatrixXcd q = qr.householderQ() * Eigen::MatrixXcd::Identity(n, n);
  Mat frame(2 * n, n);
  frame.topRows(n) = q.real();
  frame.bottomRows(n) = q.imag();
  return LagrangianFrame::from_columns(frame);
}

Mat random_symplectic(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 0.4);
  Mat sym1(n, n), sym2(n, n), invertible(n, n);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      sym1(r, c) = gauss(rng);
      sym2(r, c) = gauss(rng);
      invertible(r, c) = gauss(rng);
    }
  }
  sym1 = Mat(0.5 * (sym1 + sym1.transpose()));
  sym2 = Mat(0.5 * (sym2 + sym2.transpose()));
  invertible += 1.5 * Mat::Identity(n, n);

  Mat lower = Mat::Identity(2 * n, 2 * n);
  lower.bottomLeftCorner(n, n) = sym1;
  Mat upper = Mat::Identity(2 * n, 2 * n);
  upper.topRightCorner(n, n) = sym2;
  Mat stretch = Mat::Zero(2 * n, 2 * n);
  stretch.topLeftCorner(n, n) = invertible;
  stretch.bottomRightCorner(n, n) = invertible.inverse().transpose();
  return lower * upper * stretch;
}

} // namespace fixtures
