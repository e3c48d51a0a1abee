#include "pulsestab/evolve.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>

namespace pulsestab {

namespace {

using SparseMat = Eigen::SparseMatrix<double>;

SparseMat neumann_laplacian(int m, double h) {
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<size_t>(3 * m));
  const double inv_h2 = 1.0 / (h * h);
  for (int i = 0; i < m; ++i) {
    trip.emplace_back(i, i, -2.0 * inv_h2);
    if (i > 0) trip.emplace_back(i, i - 1, inv_h2);
    if (i + 1 < m) trip.emplace_back(i, i + 1, inv_h2);
  }
  // mirror ghosts: w_{-1} = w_1, w_{m} = w_{m-2}
  trip.emplace_back(0, 1, inv_h2);
  trip.emplace_back(m - 1, m - 2, inv_h2);
  SparseMat lap(m, m);
  lap.setFromTriplets(trip.begin(), trip.end());
  return lap;
}

double shifted_distance(const Mat& field, const PulseProfile& reference, double s,
                        double h) {
  double acc = 0.0;
  for (int i = 0; i < field.rows(); ++i) {
    const Vec ref = reference.value_at(reference.grid(i) - s);
    acc += (field.row(i).transpose() - ref).squaredNorm();
  }
  return std::sqrt(h * acc);
}

/// Distance to the translated pulse family: golden-section over the shift.
double distance_mod_translation(const Mat& field, const PulseProfile& reference,
                                double h, double* best_shift) {
  double lo = *best_shift - 0.75, hi = *best_shift + 0.75;
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = hi - inv_phi * (hi - lo);
  double d = lo + inv_phi * (hi - lo);
  double fc = shifted_distance(field, reference, c, h);
  double fd = shifted_distance(field, reference, d, h);
  while (hi - lo > 1e-6) {
    if (fc < fd) {
      hi = d; d = c; fd = fc;
      c = hi - inv_phi * (hi - lo);
      fc = shifted_distance(field, reference, c, h);
    } else {
      lo = c; c = d; fc = fd;
      d = lo + inv_phi * (hi - lo);
      fd = shifted_distance(field, reference, d, h);
    }
  }
  *best_shift = 0.5 * (lo + hi);
  return shifted_distance(field, reference, *best_shift, h);
}

} // namespace

EvolutionRun evolve(const SkewGradientModel& model, const Mat& initial,
                    const PulseProfile& reference, const EvolveOptions& opts) {
  model.validate();
  reference.validate();
  const int m = reference.num_nodes();
  const int n = model.n;
  if (initial.rows() != m || initial.cols() != n) {
    throw Error("initial field must live on the reference grid");
  }
  if (opts.dt <= 0.0 || opts.t_final <= 0.0) throw Error("dt and t_final must be positive");

  const double h = reference.spacing();
  const SparseMat lap = neumann_laplacian(m, h);
  const SparseMat identity = [m] {
    SparseMat id(m, m);
    id.setIdentity();
    return id;
  }();

  // Crank-Nicolson prefactors per component
  std::vector<Eigen::SparseLU<SparseMat>> solvers(static_cast<size_t>(n));
  std::vector<SparseMat> rhs_ops;
  rhs_ops.reserve(static_cast<size_t>(n));
  for (int k = 0; k < n; ++k) {
    const double mk = model.m_diag(k), dk = model.d_diag(k);
    SparseMat lhs = (mk / opts.dt) * identity - 0.5 * dk * lap;
    rhs_ops.push_back((mk / opts.dt) * identity + 0.5 * dk * lap);
    solvers[static_cast<size_t>(k)].compute(lhs);
    if (solvers[static_cast<size_t>(k)].info() != Eigen::Success) {
      throw Error("diffusion prefactorization failed");
    }
  }

  auto reaction = [&](const Mat& field) {
    Mat r(m, n);
    for (int i = 0; i < m; ++i) {
      r.row(i) = (model.Q() * model.grad_v(field.row(i).transpose())).transpose();
    }
    return r;
  };

  const int steps = static_cast<int>(std::ceil(opts.t_final / opts.dt));
  const int snap_every = std::max(1, steps / std::max(1, opts.num_snapshots - 1));

  EvolutionRun run;
  run.dt = opts.dt;
  run.t_final = opts.t_final;

  Mat field = initial;
  Mat react_prev = reaction(field);
  double shift = 0.0;

  auto record = [&](double t) {
    run.snapshot_times.push_back(t);
    run.snapshots.push_back(field);
    run.distances.push_back(distance_mod_translation(field, reference, h, &shift));
  };
  record(0.0);

  for (int j = 0; j < steps; ++j) {
    const Mat react_now = reaction(field);
    const Mat extrap = j == 0 ? react_now : Mat(1.5 * react_now - 0.5 * react_prev);
    Mat next(m, n);
    for (int k = 0; k < n; ++k) {
      const Vec rhs = rhs_ops[static_cast<size_t>(k)] * field.col(k) + extrap.col(k);
      next.col(k) = solvers[static_cast<size_t>(k)].solve(rhs);
    }
    react_prev = react_now;
    field = next;
    const double t = (j + 1) * opts.dt;
    if (!field.allFinite() || field.cwiseAbs().maxCoeff() > opts.blowup_norm) {
      run.blew_up = true;
      record(t);
      break;
    }
    if ((j + 1) % snap_every == 0 || j + 1 == steps) record(t);
  }
  run.drift = shift;

  // default fit window skips the transient and the saturated tail
  const double t_end = run.snapshot_times.back();
  if (run.snapshot_times.size() >= 12 && !run.blew_up) {
    try {
      const GrowthFit fit = growth_rate_fit(run, 0.15 * t_end, 0.9 * t_end);
      run.growth_rate = fit.rate;
      run.fit_r_squared = fit.r_squared;
      run.low_confidence_fit = fit.low_confidence;
    } catch (const Error&) {
      run.low_confidence_fit = true;
    }
  } else {
    run.low_confidence_fit = true;
  }
  return run;
}

GrowthFit growth_rate_fit(const EvolutionRun& run, double t_begin, double t_end) {
  std::vector<double> ts, logs;
  for (size_t i = 0; i < run.snapshot_times.size(); ++i) {
    const double t = run.snapshot_times[i];
    if (t < t_begin || t > t_end) continue;
    const double d = std::max(run.distances[i], 1e-300);
    ts.push_back(t);
    logs.push_back(std::log(d));
  }
  if (ts.size() < 10) throw Error("growth fit needs at least 10 snapshots in the window");

  const auto count = static_cast<double>(ts.size());
  double st = 0, sl = 0, stt = 0, stl = 0;
  for (size_t i = 0; i < ts.size(); ++i) {
    st += ts[i];
    sl += logs[i];
    stt += ts[i] * ts[i];
    stl += ts[i] * logs[i];
  }
  GrowthFit fit;
  const double denom = count * stt - st * st;
  if (std::abs(denom) < 1e-30) throw Error("degenerate time window");
  fit.rate = (count * stl - st * sl) / denom;
  const double intercept = (sl - fit.rate * st) / count;

  double ss_res = 0, ss_tot = 0;
  const double mean = sl / count;
  int non_monotone = 0;
  for (size_t i = 0; i < ts.size(); ++i) {
    const double pred = intercept + fit.rate * ts[i];
    ss_res += (logs[i] - pred) * (logs[i] - pred);
    ss_tot += (logs[i] - mean) * (logs[i] - mean);
    if (i > 0 && (logs[i] - logs[i - 1]) * fit.rate < 0.0) ++non_monotone;
  }
  fit.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
  fit.low_confidence = non_monotone > static_cast<int>(ts.size()) / 5;
  return fit;
}

} // namespace pulsestab
