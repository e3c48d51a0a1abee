// Command-line pipeline around the pulse stability library: solve a
// standing pulse, check the structural hypotheses, run the index /
// spectral / evolution stages and assemble the verdict.
#include <CLI11.hpp>
#include <filesystem>
#include <iostream>
#include <random>

#include "pulsestab/config.hpp"
#include "pulsestab/io.hpp"
#include "pulsestab/version.hpp"

namespace {

using namespace pulsestab;

constexpr int kExitStable = 0;
constexpr int kExitInconclusive = 2;
constexpr int kExitHypothesisFailed = 3;
constexpr int kExitCrossCheckFailed = 4;
constexpr int kExitUnstable = 10;

struct Cli {
  std::string config_path;
  std::string profile_path;
  std::string output_path;
  bool json_only = false;
  unsigned long long seed_override = 0;
  bool seed_set = false;
};

void emit(const Cli& cli, const std::string& text) {
  if (!cli.output_path.empty()) {
    write_text_file(cli.output_path, text);
  } else {
    std::cout << text;
  }
}

RunConfig load(const Cli& cli) {
  if (cli.config_path.empty()) throw Error("missing --config");
  RunConfig cfg = load_config(cli.config_path);
  if (cli.seed_set) cfg.rng_seed = cli.seed_override;
  return cfg;
}

PulseProfile load_or_solve_profile(const Cli& cli, const RunConfig& cfg,
                                   const SkewGradientModel& model) {
  if (!cli.profile_path.empty()) {
    PulseProfile profile = load_profile(cli.profile_path);
    if (profile.decay_rate <= 0.0) {
      // sidecar missing: recover the decay exponent from the rest state
      HamiltonianFamily family;
      family.model = &model;
      family.profile = &profile;
      profile.decay_rate = asymptotic_split(family).spectral_gap;
    }
    return profile;
  }
  PulseProfile seed;
  const PulseProfile* seed_ptr = nullptr;
  if (!cfg.seed_profile_path.empty()) {
    seed = load_profile(cfg.seed_profile_path);
    seed_ptr = &seed;
  }
  return solve_pulse(model, cfg.pulse, seed_ptr);
}

Mat perturbed_initial(const RunConfig& cfg, const PulseProfile& profile) {
  std::mt19937_64 rng(cfg.rng_seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const int m = profile.num_nodes();
  const int n = profile.n();
  // smooth perturbation: a few random Fourier modes under a tail envelope
  Mat noise = Mat::Zero(m, n);
  const double width = profile.half_width();
  for (int k = 0; k < n; ++k) {
    double a[5], b[5];
    for (int j = 0; j < 5; ++j) {
      a[j] = gauss(rng);
      b[j] = gauss(rng);
    }
    for (int i = 0; i < m; ++i) {
      const double x = profile.grid(i) / width;
      double value = 0.0;
      for (int j = 0; j < 5; ++j) {
        value += a[j] * std::sin((j + 1) * M_PI * x) + b[j] * std::cos((j + 1) * M_PI * x);
      }
      noise(i, k) = value * std::exp(-std::abs(profile.grid(i)) / 4.0);
    }
  }
  noise *= cfg.perturbation_amplitude / std::max(noise.cwiseAbs().maxCoeff(), 1e-30);
  return profile.w + noise;
}

struct PipelineResult {
  HypothesisReport hypothesis;
  StabilityIndexResult index;
  SpectralFlowResult flow;
  CriterionResult criterion;
  SpectrumReport spectrum;
  IndexReport report;
};

PipelineResult run_pipeline(const RunConfig& cfg, const SkewGradientModel& model,
                            const PulseProfile& profile) {
  PipelineResult out;
  out.hypothesis = check_hypotheses(model, profile);
  if (!out.hypothesis.h1_holds || !out.hypothesis.h2_holds) {
    throw Error("hypothesis check failed: " + out.hypothesis.violation);
  }
  out.index = stability_index(model, profile, cfg.index);
  out.flow = spectral_flow_F(model, profile, 0.0,
                             cfg.index.lambda_max > 0.0 ? cfg.index.lambda_max
                                                        : out.hypothesis.lambda_hat,
                             0.0, cfg.index);
  out.criterion = criterion_integral(model, profile);
  const Mat l = discretize_L(model, profile, cfg.spectrum);
  out.spectrum = eigen_report(l, model, profile, cfg.spectrum);
  out.report = make_verdict(out.index, out.flow, out.criterion,
                            out.spectrum.sufficiency_ok, out.spectrum.zero_simple);
  return out;
}

int verdict_exit_code(const PipelineResult& result) {
  // internal cross-checks: index equals spectral flow; where the
  // sufficiency conditions hold both must match the eigensolver count
  if (result.index.i_w0 != result.flow.spectral_flow) return kExitCrossCheckFailed;
  if (result.spectrum.sufficiency_ok &&
      result.report.verdict != Stability::Unstable &&
      result.index.i_w0 != result.spectrum.n_plus) {
    return kExitCrossCheckFailed;
  }
  switch (result.report.verdict) {
    case Stability::Unstable: return kExitUnstable;
    case Stability::StableSufficient: return kExitStable;
    case Stability::Inconclusive: return kExitInconclusive;
  }
  return kExitInconclusive;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Standing-pulse stability analysis for skew-gradient "
               "reaction-diffusion systems"};
  app.set_version_flag("--version", std::string(kVersion));
  app.footer(config_reference());

  Cli cli;
  app.add_option("-c,--config", cli.config_path, "JSON configuration file")
      ->expected(1);
  app.add_option("-p,--profile", cli.profile_path, "pulse profile CSV");
  app.add_option("-o,--output", cli.output_path, "output file or directory");
  app.add_flag("--json", cli.json_only, "suppress human-readable summaries");
  app.add_option("--seed", cli.seed_override, "override the evolution RNG seed")
      ->each([&cli](const std::string&) { cli.seed_set = true; });

  auto* pulse_cmd = app.add_subcommand("pulse", "pulse profile stage");
  auto* pulse_solve = pulse_cmd->add_subcommand("solve", "solve the standing pulse");
  auto* hyp_cmd = app.add_subcommand("hyp", "hypothesis stage");
  auto* hyp_check = hyp_cmd->add_subcommand("check", "verify hypothesis margins");
  auto* index_cmd = app.add_subcommand("index", "index stage");
  auto* index_maslov = index_cmd->add_subcommand("maslov", "conjugate-point index");
  auto* index_sf = index_cmd->add_subcommand("sf", "spectral flow");
  auto* index_criterion = index_cmd->add_subcommand("criterion", "momentum integral");
  auto* spectrum_cmd = app.add_subcommand("spectrum", "direct eigensolver stage");
  auto* spectrum_eig = spectrum_cmd->add_subcommand("eig", "discretized eigensolve");
  auto* evolve_cmd = app.add_subcommand("evolve", "nonlinear evolution stage");
  auto* evolve_run = evolve_cmd->add_subcommand("run", "perturbed evolution run");
  auto* verdict_cmd = app.add_subcommand("verdict", "full pipeline and verdict");
  auto* report_cmd = app.add_subcommand("report", "bundled reports");
  auto* report_all = report_cmd->add_subcommand("all", "all reports plus plot CSVs");

  CLI11_PARSE(app, argc, argv);

  try {
    if (pulse_solve->parsed()) {
      const RunConfig cfg = load(cli);
      const SkewGradientModel model = cfg.make_model();
      PulseProfile seed;
      const PulseProfile* seed_ptr = nullptr;
      if (!cfg.seed_profile_path.empty()) {
        seed = load_profile(cfg.seed_profile_path);
        seed_ptr = &seed;
      }
      const PulseProfile profile = solve_pulse(model, cfg.pulse, seed_ptr);
      const std::string out_path =
          cli.output_path.empty() ? "profile.csv" : cli.output_path;
      save_profile(profile, out_path);
      if (!cli.json_only) {
        std::cout << "pulse converged: residual " << profile.residual_norm
                  << ", decay rate " << profile.decay_rate << ", written to "
                  << out_path << "\n";
      }
      return 0;
    }

    if (hyp_check->parsed()) {
      const RunConfig cfg = load(cli);
      const SkewGradientModel model = cfg.make_model();
      const PulseProfile profile = load_or_solve_profile(cli, cfg, model);
      const HypothesisReport report = check_hypotheses(model, profile);
      emit(cli, hypothesis_report_json(report, cfg.config_hash));
      return (report.h1_holds && report.h2_holds) ? 0 : kExitHypothesisFailed;
    }

    if (index_maslov->parsed() || index_sf->parsed() || index_criterion->parsed()) {
      const RunConfig cfg = load(cli);
      const SkewGradientModel model = cfg.make_model();
      const PulseProfile profile = load_or_solve_profile(cli, cfg, model);
      IndexReport fragment;
      if (index_maslov->parsed()) {
        const StabilityIndexResult idx = stability_index(model, profile, cfg.index);
        fragment.i_w0 = idx.i_w0;
        fragment.crossings = idx.crossings;
      } else if (index_sf->parsed()) {
        const HypothesisReport hyp = check_hypotheses(model, profile);
        const SpectralFlowResult sf = spectral_flow_F(
            model, profile, 0.0,
            cfg.index.lambda_max > 0.0 ? cfg.index.lambda_max : hyp.lambda_hat, 0.0,
            cfg.index);
        fragment.spectral_flow = sf.spectral_flow;
        fragment.sf_crossings = sf.crossings;
      } else {
        const CriterionResult crit = criterion_integral(model, profile);
        fragment.criterion_integral = crit.value;
        fragment.quadrature_warning = crit.quadrature_warning;
        fragment.tau0_value = crit.tau0_value;
      }
      emit(cli, index_report_json(fragment, cfg.config_hash));
      return 0;
    }

    if (spectrum_eig->parsed()) {
      const RunConfig cfg = load(cli);
      const SkewGradientModel model = cfg.make_model();
      const PulseProfile profile = load_or_solve_profile(cli, cfg, model);
      const Mat l = discretize_L(model, profile, cfg.spectrum);
      const SpectrumReport report = eigen_report(l, model, profile, cfg.spectrum);
      emit(cli, spectrum_report_json(report, cfg.config_hash));
      return 0;
    }

    if (evolve_run->parsed()) {
      const RunConfig cfg = load(cli);
      const SkewGradientModel model = cfg.make_model();
      const PulseProfile profile = load_or_solve_profile(cli, cfg, model);
      const EvolutionRun run =
          evolve(model, perturbed_initial(cfg, profile), profile, cfg.evolve);
      emit(cli, evolution_run_json(run, cfg.config_hash));
      return 0;
    }

    if (verdict_cmd->parsed()) {
      const RunConfig cfg = load(cli);
      const SkewGradientModel model = cfg.make_model();
      const PulseProfile profile = load_or_solve_profile(cli, cfg, model);
      const PipelineResult result = run_pipeline(cfg, model, profile);
      emit(cli, index_report_json(result.report, cfg.config_hash));
      if (!cli.json_only) {
        std::cerr << "verdict: " << to_string(result.report.verdict) << " ("
                  << result.report.verdict_reason << ")\n";
      }
      return verdict_exit_code(result);
    }

    if (report_all->parsed()) {
      const RunConfig cfg = load(cli);
      const SkewGradientModel model = cfg.make_model();
      const PulseProfile profile = load_or_solve_profile(cli, cfg, model);
      const std::string dir = cli.output_path.empty() ? "report" : cli.output_path;
      std::filesystem::create_directories(dir);

      const PipelineResult result = run_pipeline(cfg, model, profile);
      const EvolutionRun run =
          evolve(model, perturbed_initial(cfg, profile), profile, cfg.evolve);

      write_text_file(dir + "/hypothesis.json",
                      hypothesis_report_json(result.hypothesis, cfg.config_hash));
      write_text_file(dir + "/index.json",
                      index_report_json(result.report, cfg.config_hash));
      write_text_file(dir + "/spectrum.json",
                      spectrum_report_json(result.spectrum, cfg.config_hash));
      write_text_file(dir + "/evolution.json",
                      evolution_run_json(run, cfg.config_hash));
      write_text_file(dir + "/crossings_tau.csv", crossings_csv(result.report.crossings));
      write_text_file(dir + "/crossings_lambda.csv",
                      crossings_csv(result.report.sf_crossings));
      write_text_file(dir + "/eigenvalues.csv",
                      eigenvalues_csv(result.spectrum.eigenvalues));
      save_profile(profile, dir + "/profile.csv");

      // principal-angle trace of E^u(tau) against the reference Lagrangian
      {
        HamiltonianFamily family;
        family.model = &model;
        family.profile = &profile;
        const int samples = 400;
        Vec taus(samples);
        for (int i = 0; i < samples; ++i) {
          taus(i) = profile.grid(0) + (profile.half_width() - profile.grid(0)) *
                                          static_cast<double>(i) / (samples - 1);
        }
        const FramePath path = integrate_unstable(family, taus);
        const LagrangianFrame ref = reference_lagrangian(model.n, model.activators);
        std::ostringstream angles;
        angles << "tau,min_angle,gap\n";
        for (int i = 0; i < samples; ++i) {
          angles << taus(i) << "," << principal_angles(path.at(i), ref).minCoeff()
                 << "," << frame_gap(path.at(i), ref) << "\n";
        }
        write_text_file(dir + "/angle_trace.csv", angles.str());
        write_text_file(dir + "/frames.csv", frame_path_csv(path));
      }

      // Evans gap versus lambda
      {
        const int samples = 120;
        const double lambda_max = cfg.index.lambda_max > 0.0
                                      ? cfg.index.lambda_max
                                      : result.hypothesis.lambda_hat;
        std::ostringstream gaps;
        gaps << "lambda,evans_gap\n";
        for (int i = 0; i < samples; ++i) {
          HamiltonianFamily family;
          family.model = &model;
          family.profile = &profile;
          family.lambda = lambda_max * static_cast<double>(i) / (samples - 1);
          gaps << family.lambda << "," << evans_gap(family) << "\n";
        }
        write_text_file(dir + "/evans_gap.csv", gaps.str());
      }

      if (!cli.json_only) std::cout << "report bundle written to " << dir << "/\n";
      return verdict_exit_code(result);
    }
  } catch (const Error& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  }

  std::cout << app.help();
  return 0;
}
