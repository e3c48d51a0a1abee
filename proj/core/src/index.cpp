#include "pulsestab/index.hpp"

#include <algorithm>
#include <cmath>

namespace pulsestab {

std::string to_string(Stability verdict) {
  switch (verdict) {
    case Stability::Unstable: return "Unstable";
    case Stability::StableSufficient: return "StableSufficient";
    case Stability::Inconclusive: return "Inconclusive";
  }
  return "Inconclusive";
}

namespace {

Vec linspace(double a, double b, int count) {
  Vec v(count);
  for (int i = 0; i < count; ++i) {
    v(i) = a + (b - a) * static_cast<double>(i) / (count - 1);
  }
  return v;
}

bool is_sampling_error(const Error& err) {
  return std::string(err.what()).find("refine the") != std::string::npos;
}

/// Runs `attempt(samples)` with the sample count doubled until the
/// 0.2-rad consecutive-frame precondition holds (at most four doublings).
template <typename Fn>
auto densify_until_smooth(int samples, Fn&& attempt) {
  for (int round = 0;; ++round) {
    try {
      return attempt(samples);
    } catch (const Error& err) {
      if (round >= 4 || !is_sampling_error(err)) throw;
      samples *= 2;
    }
  }
}

} // namespace

StabilityIndexResult stability_index(const SkewGradientModel& model,
                                     const PulseProfile& profile,
                                     const IndexOptions& opts) {
  const HypothesisReport hyp = check_hypotheses(model, profile);
  if (!hyp.h1_holds || !hyp.h2_holds) {
    throw Error("stability_index requires both hypothesis margins: " + hyp.violation);
  }

  HamiltonianFamily family;
  family.model = &model;
  family.profile = &profile;
  family.lambda = 0.0;
  family.epsilon = 0.0;

  // Restrict the scan to where the translation solution is numerically
  // trustworthy: once the tail values approach the solver noise floor the
  // pinned kernel direction jitters.
  const double amplitude = profile.w.cwiseAbs().maxCoeff();
  const double trust =
      std::max(1e-9 * amplitude, 1e3 * (profile.residual_norm + 1e-15));
  int lo = 0, hi = profile.num_nodes() - 1;
  while (lo < hi && profile.w.row(lo).cwiseAbs().maxCoeff() < trust) ++lo;
  while (hi > lo && profile.w.row(hi).cwiseAbs().maxCoeff() < trust) --hi;
  if (hi - lo < 8) throw Error("profile has no resolved core to scan");
  const double x_left = profile.grid(lo);
  const double x_right = profile.grid(hi);
  const int base_samples =
      opts.tau_samples > 0
          ? opts.tau_samples
          : std::max(160, static_cast<int>(std::ceil(
                              4.0 * profile.decay_rate * (x_right - x_left))));
  const LagrangianFrame lambda_r = reference_lagrangian(model.n, model.activators);

  double t_cap = x_right;
  MaslovResult pairing = densify_until_smooth(base_samples, [&](int samples) {
    const Vec scan = linspace(x_left, x_right, samples);
    // kernel-pinned frames: the tau scan lives at lambda = eps = 0 where
    // the translation solution is known exactly from the profile
    const FramePath unstable = integrate_unstable_pinned(family, scan);

    // endpoints must start and end transversally
    if (frame_gap(unstable.at(0), lambda_r) < 0.02) {
      throw Error("increase T_cap: crossing at the left scan boundary");
    }
    // No crossings can occur beyond the scan end if the frame stays
    // transversal over a trailing window that captures the full tail
    // behaviour.  Real tails settle, so 10% of the scan suffices; spiral
    // tails (complex asymptotic exponents) rotate forever with period
    // pi / Im(mu), so the window must cover at least one period.
    const AsymptoticSplit asym = asymptotic_split(family);
    double window_len = 0.1 * (x_right - x_left);
    if (asym.max_imag > 1e-9) {
      const double period = M_PI / asym.max_imag;
      window_len = std::max(window_len, 1.2 * period);
      if (window_len > 0.6 * (x_right - x_left)) {
        throw Error("increase T_cap: spiral period exceeds the trusted scan window");
      }
    }
    const double step_len = scan(1) - scan(0);
    const int window = std::min(samples - 1,
                                std::max(2, static_cast<int>(window_len / step_len)));
    for (int k = samples - window; k < samples; ++k) {
      if (frame_gap(unstable.at(k), lambda_r) < 0.02) {
        throw Error("increase T_cap: crossing at scan boundary");
      }
    }
    t_cap = x_right;

    LagrangianPairPath pair;
    pair.a = x_left;
    pair.b = t_cap;
    pair.first = [&](double) { return lambda_r; };
    pair.second = [&](double t) { return unstable_frame_pinned_at(family, t); };
    pair.samples.assign(scan.data(), scan.data() + scan.size());

    MaslovOptions mopts;
    mopts.crossing_tol = opts.crossing_tol;
    return maslov_index_pair(pair, mopts);
  });

  StabilityIndexResult result;
  result.t_cap = t_cap;
  int dim_sum = 0;
  for (auto& rec : pairing.crossings) {
    // verify positivity through the flow form <A xi, xi>
    const LagrangianFrame here = unstable_frame_pinned_at(family, rec.location);
    CrossingRecord flow = crossing_form_flow(assemble_A(family, rec.location), here,
                                             lambda_r, std::max(opts.crossing_tol, 1e-7));
    flow.location = rec.location;
    if (flow.form_eigenvalues.minCoeff() <= 0.0 ||
        flow.signature != flow.intersection_dim) {
      throw Error("crossing form at tau = " + std::to_string(rec.location) +
                  " is not positive definite; inhibitor margin (h2) inconsistent");
    }
    dim_sum += flow.intersection_dim;
    result.crossings.push_back(flow);
  }
  result.i_w0 = dim_sum;
  if (pairing.index != dim_sum) {
    throw Error("Maslov index and crossing dimensions disagree (" +
                std::to_string(pairing.index) + " vs " + std::to_string(dim_sum) + ")");
  }
  return result;
}

SpectralFlowResult spectral_flow_F(const SkewGradientModel& model,
                                   const PulseProfile& profile,
                                   double lambda_min, double lambda_max,
                                   double epsilon, const IndexOptions& opts) {
  const HypothesisReport hyp = check_hypotheses(model, profile);
  if (!hyp.h1_holds) {
    throw Error("spectral flow requires the rest-state margin: " + hyp.violation);
  }
  if (lambda_max <= 0.0) lambda_max = hyp.lambda_hat;
  if (lambda_min < 0.0) throw Error("lambda_min must be non-negative");
  if (lambda_max < lambda_min) throw Error("lambda_max below lambda_min");
  if (epsilon < 0.0 || epsilon > hyp.epsilon_max) {
    throw Error("epsilon outside [0, epsilon_max]");
  }

  SpectralFlowResult result;
  if (lambda_max == lambda_min) return result; // empty interval

  auto stable_at = [&](double lambda) {
    HamiltonianFamily family;
    family.model = &model;
    family.profile = &profile;
    family.lambda = lambda;
    family.epsilon = epsilon;
    return stable_frame_at(family, 0.0);
  };
  auto unstable_at = [&](double lambda) {
    HamiltonianFamily family;
    family.model = &model;
    family.profile = &profile;
    family.lambda = lambda;
    family.epsilon = epsilon;
    return unstable_frame_at(family, 0.0);
  };

  // The translation kernel sits exactly at lambda = 0 but the discretized
  // coefficients displace it by O(h^2).  For the unperturbed family the
  // left endpoint is therefore handled analytically: the co-index of the
  // endpoint form -<Q M w0', w0'> decides its contribution and a small
  // window around zero is excluded from the interior scan.
  const bool handle_zero = lambda_min == 0.0 && epsilon == 0.0;
  double scan_begin = lambda_min;
  int endpoint_contribution = 0;
  if (handle_zero) {
    const double window =
        opts.zero_exclusion_fraction * std::max(lambda_max, hyp.lambda_hat);
    scan_begin = std::min(window, 0.5 * lambda_max);
    CriterionResult crit = criterion_integral(model, profile);
    CrossingRecord translation;
    translation.location = 0.0;
    translation.intersection_dim = 1;
    translation.form_eigenvalues = Vec::Constant(1, -crit.value);
    translation.signature = crit.value < 0.0 ? 1 : -1;
    endpoint_contribution = crit.value < 0.0 ? 1 : 0; // co-index of the form
    result.crossings.push_back(translation);
  }

  MaslovResult pairing =
      densify_until_smooth(std::max(opts.lambda_samples, 16), [&](int samples) {
        LagrangianPairPath pair;
        pair.a = scan_begin;
        pair.b = lambda_max;
        pair.first = stable_at;
        pair.second = unstable_at;
        // oscillatory channels wind like sqrt(lambda), so a quadratic
        // grid keeps the per-sample rotation roughly uniform
        Vec scan(samples);
        for (int i = 0; i < samples; ++i) {
          const double s = static_cast<double>(i) / (samples - 1);
          scan(i) = scan_begin + (lambda_max - scan_begin) * s * s;
        }
        pair.samples.assign(scan.data(), scan.data() + scan.size());

        MaslovOptions mopts;
        mopts.crossing_tol = opts.crossing_tol;
        mopts.fd_step = 1e-5 * std::max(lambda_max, hyp.lambda_hat);
        return maslov_index_pair(pair, mopts);
      });

  // crossings at the endpoints of the scan window are misplaced kernels
  for (const auto& rec : pairing.crossings) {
    if (std::abs(rec.location - lambda_max) < 1e-9 * lambda_max) {
      throw Error("raise lambda_max: crossing at the right endpoint (c1 underestimated?)");
    }
    if (handle_zero && std::abs(rec.location - scan_begin) < 1e-9 * lambda_max) {
      throw Error("zero-window boundary clipped a crossing; adjust the window");
    }
  }

  result.spectral_flow = -(pairing.index + endpoint_contribution);
  for (const auto& rec : pairing.crossings) result.crossings.push_back(rec);
  std::sort(result.crossings.begin(), result.crossings.end(),
            [](const CrossingRecord& a, const CrossingRecord& b) {
              return a.location < b.location;
            });
  return result;
}

CriterionResult criterion_integral(const SkewGradientModel& model,
                                   const PulseProfile& profile) {
  model.validate();
  CriterionResult result;
  bool warn = false;
  result.value = profile_quadrature(profile, model.m_diag, model.q_diag, &warn);
  result.quadrature_warning = warn;
  if (model.n == 2) {
    result.tau0_value = tau0(profile);
  }
  return result;
}

IndexReport make_verdict(const StabilityIndexResult& idx,
                         const SpectralFlowResult& sf, const CriterionResult& crit,
                         bool sufficiency_ok, bool zero_simple) {
  IndexReport report;
  report.i_w0 = idx.i_w0;
  report.crossings = idx.crossings;
  report.spectral_flow = sf.spectral_flow;
  report.sf_crossings = sf.crossings;
  report.criterion_integral = crit.value;
  report.quadrature_warning = crit.quadrature_warning;
  report.tau0_value = crit.tau0_value;

  if (report.i_w0 > 0) {
    report.verdict = Stability::Unstable;
    report.verdict_reason = "stability index positive (i = " +
                            std::to_string(report.i_w0) + ")";
  } else if (report.criterion_integral < 0.0) {
    report.verdict = Stability::Unstable;
    report.verdict_reason = "criterion integral negative";
  } else if (sufficiency_ok && zero_simple) {
    report.verdict = Stability::StableSufficient;
    report.verdict_reason = "index zero, sufficiency conditions hold, zero simple";
  } else {
    report.verdict = Stability::Inconclusive;
    report.verdict_reason = sufficiency_ok ? "zero eigenvalue not simple"
                                           : "sufficiency conditions fail";
  }
  return report;
}

} // namespace pulsestab
