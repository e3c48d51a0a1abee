#include <cmath>
#include <doctest.h>
#include <random>

#include "fixtures.hpp"
#include "pulsestab/evolve.hpp"

using namespace pulsestab;

namespace {

// The evolution tests need the pulse that satisfies the *discrete*
// equations: seeding with the analytic profile leaves an O(h^2) residual
// that feeds the unstable mode immediately.
const PulseProfile& scalar_profile() { return fixtures::solved_scalar_profile(); }

Mat even_bump_perturbation(const PulseProfile& profile, double amplitude) {
  Mat field = profile.w;
  for (int i = 0; i < profile.num_nodes(); ++i) {
    const double x = profile.grid(i);
    field(i, 0) += amplitude * std::exp(-x * x / 4.0);
  }
  return field;
}

} // namespace

TEST_CASE("small perturbations of the rest state decay") {
  const SkewGradientModel model = build_scalar_bistable();
  Mat initial = Mat::Zero(scalar_profile().num_nodes(), 1);
  for (int i = 0; i < initial.rows(); ++i) {
    const double x = scalar_profile().grid(i);
    initial(i, 0) = 1e-3 * std::exp(-x * x / 8.0);
  }
  EvolveOptions opts;
  opts.dt = 5e-3;
  opts.t_final = 6.0;
  const EvolutionRun run = evolve(model, initial, scalar_profile(), opts);
  CHECK_FALSE(run.blew_up);
  const double first = run.snapshots.front().cwiseAbs().maxCoeff();
  const double last = run.snapshots.back().cwiseAbs().maxCoeff();
  CHECK(last < 0.1 * first);
}

TEST_CASE("the exact pulse is stationary") {
  const SkewGradientModel model = build_scalar_bistable();
  EvolveOptions opts;
  opts.dt = 2e-3;
  opts.t_final = 10.0;
  const EvolutionRun run = evolve(model, scalar_profile().w, scalar_profile(), opts);
  CHECK_FALSE(run.blew_up);
  CHECK(std::abs(run.drift) < 1e-4);
  CHECK(run.distances.back() < 1e-4);
}

TEST_CASE("growth fit recovers a synthetic exponential") {
  EvolutionRun run;
  run.dt = 0.1;
  run.t_final = 10.0;
  for (int i = 0; i <= 100; ++i) {
    const double t = 0.1 * i;
    run.snapshot_times.push_back(t);
    run.distances.push_back(std::exp(0.5 * t) * 1e-6);
  }
  const GrowthFit fit = growth_rate_fit(run, 0.0, 10.0);
  CHECK(fit.rate == doctest::Approx(0.5).epsilon(1e-10));
  CHECK(fit.r_squared > 0.999);
  CHECK_FALSE(fit.low_confidence);

  // decaying data gives a negative rate
  EvolutionRun decay = run;
  for (size_t i = 0; i < decay.distances.size(); ++i) {
    decay.distances[i] = std::exp(-0.25 * decay.snapshot_times[i]);
  }
  CHECK(growth_rate_fit(decay, 0.0, 10.0).rate == doctest::Approx(-0.25));

  CHECK_THROWS_WITH_AS(growth_rate_fit(run, 0.0, 0.5),
                       doctest::Contains("at least 10"), Error);
}

TEST_CASE("perturbed scalar pulse grows at the leading eigenvalue rate") {
  const SkewGradientModel model = build_scalar_bistable();
  EvolveOptions opts;
  opts.dt = 4e-3;
  opts.t_final = 8.0;
  opts.num_snapshots = 160;
  const Mat initial = even_bump_perturbation(scalar_profile(), 1e-5);
  const EvolutionRun run = evolve(model, initial, scalar_profile(), opts);
  CHECK_FALSE(run.blew_up);
  const GrowthFit fit = growth_rate_fit(run, 2.5, 7.5);
  CHECK(fit.rate == doctest::Approx(1.25).epsilon(0.10));
  CHECK(fit.r_squared > 0.99);
}

TEST_CASE("halving dt moves the fitted rate by less than one percent") {
  const SkewGradientModel model = build_scalar_bistable();
  const Mat initial = even_bump_perturbation(scalar_profile(), 1e-5);
  auto rate_at = [&](double dt) {
    EvolveOptions opts;
    opts.dt = dt;
    opts.t_final = 6.0;
    opts.num_snapshots = 120;
    const EvolutionRun run = evolve(model, initial, scalar_profile(), opts);
    return growth_rate_fit(run, 2.0, 5.5).rate;
  };
  const double coarse = rate_at(8e-3);
  const double fine = rate_at(4e-3);
  CHECK(std::abs(coarse - fine) / std::abs(fine) < 0.01);
}

TEST_CASE("blow-up is truncated and flagged") {
  // reversed potential: the rest state repels and the field runs away
  SkewGradientModel model = build_scalar_bistable();
  model.grad_v = [](const Vec& w) {
    Vec g(1);
    g(0) = w(0) + w(0) * w(0) * w(0);
    return g;
  };
  model.hess_v = [](const Vec& w) {
    return Mat::Constant(1, 1, 1.0 + 3.0 * w(0) * w(0));
  };
  model.b_inf = Mat::Constant(1, 1, 1.0);
  EvolveOptions opts;
  opts.dt = 1e-2;
  opts.t_final = 40.0;
  opts.blowup_norm = 1e3;
  const EvolutionRun run = evolve(model, scalar_profile().w, scalar_profile(), opts);
  CHECK(run.blew_up);
  CHECK(run.snapshot_times.back() < 40.0);
}
