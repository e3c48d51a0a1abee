#include "pulsestab/io.hpp"

#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "pulsestab/version.hpp"

namespace pulsestab {

namespace {

using nlohmann::json;

json crossing_to_json(const CrossingRecord& rec) {
  json j;
  j["location"] = rec.location;
  j["intersection_dim"] = rec.intersection_dim;
  j["signature"] = rec.signature;
  std::vector<double> eigs(rec.form_eigenvalues.data(),
                           rec.form_eigenvalues.data() + rec.form_eigenvalues.size());
  j["form_eigenvalues"] = eigs;
  return j;
}

json stamped(const std::string& config_hash) {
  json j;
  j["config_hash"] = config_hash;
  j["version"] = kVersion;
  return j;
}

} // namespace

std::string hypothesis_report_json(const HypothesisReport& report,
                                   const std::string& config_hash) {
  json j = stamped(config_hash);
  j["h1_holds"] = report.h1_holds;
  j["c2"] = report.c2;
  j["h2_holds"] = report.h2_holds;
  if (report.c3_h2.has_value()) {
    j["c3_h2"] = *report.c3_h2;
  } else {
    j["c3_h2"] = nullptr;
  }
  j["c1"] = report.c1;
  j["lambda_hat"] = report.lambda_hat;
  j["epsilon_max"] = report.epsilon_max;
  j["violation"] = report.violation;
  return j.dump(2) + "\n";
}

std::string index_report_json(const IndexReport& report,
                              const std::string& config_hash) {
  json j = stamped(config_hash);
  j["i_w0"] = report.i_w0;
  j["spectral_flow"] = report.spectral_flow;
  j["criterion_integral"] = report.criterion_integral;
  j["quadrature_warning"] = report.quadrature_warning;
  if (report.tau0_value.has_value()) {
    j["tau0"] = *report.tau0_value;
  } else {
    j["tau0"] = nullptr;
  }
  j["verdict"] = to_string(report.verdict);
  j["verdict_reason"] = report.verdict_reason;
  j["crossings"] = json::array();
  for (const auto& rec : report.crossings) j["crossings"].push_back(crossing_to_json(rec));
  j["sf_crossings"] = json::array();
  for (const auto& rec : report.sf_crossings) {
    j["sf_crossings"].push_back(crossing_to_json(rec));
  }
  return j.dump(2) + "\n";
}

std::string spectrum_report_json(const SpectrumReport& report,
                                 const std::string& config_hash) {
  json j = stamped(config_hash);
  j["n_plus"] = report.n_plus;
  j["zero_mode_error"] = report.zero_mode_error;
  j["zero_simple"] = report.zero_simple;
  j["zero_cluster_radius"] = report.zero_cluster_radius;
  j["ess_bound_ok"] = report.ess_bound_ok;
  j["sufficiency_ok"] = report.sufficiency_ok;
  j["re_tol"] = report.re_tol;
  j["im_tol"] = report.im_tol;
  j["eigenvalue_count"] = report.eigenvalues.size();
  // the full list goes to CSV; embed the leading few for quick inspection
  json head = json::array();
  for (size_t i = 0; i < report.eigenvalues.size() && i < 12; ++i) {
    head.push_back({{"re", report.eigenvalues[i].real()},
                    {"im", report.eigenvalues[i].imag()}});
  }
  j["leading_eigenvalues"] = head;
  return j.dump(2) + "\n";
}

std::string evolution_run_json(const EvolutionRun& run, const std::string& config_hash) {
  json j = stamped(config_hash);
  j["dt"] = run.dt;
  j["t_final"] = run.t_final;
  j["growth_rate"] = run.growth_rate;
  j["fit_r_squared"] = run.fit_r_squared;
  j["drift"] = run.drift;
  j["blew_up"] = run.blew_up;
  j["low_confidence_fit"] = run.low_confidence_fit;
  j["snapshots"] = run.snapshot_times.size();
  return j.dump(2) + "\n";
}

std::string crossings_csv(const std::vector<CrossingRecord>& crossings) {
  std::ostringstream out;
  out << "location,intersection_dim,signature,form_eigenvalues\n";
  char buf[32];
  for (const auto& rec : crossings) {
    std::snprintf(buf, sizeof buf, "%.17g", rec.location);
    out << buf << "," << rec.intersection_dim << "," << rec.signature << ",";
    for (int i = 0; i < rec.form_eigenvalues.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.17g", rec.form_eigenvalues(i));
      out << (i ? ";" : "") << buf;
    }
    out << "\n";
  }
  return out.str();
}

std::string eigenvalues_csv(const std::vector<std::complex<double>>& eigenvalues) {
  std::ostringstream out;
  out << "re,im\n";
  char buf[32];
  for (const auto& ev : eigenvalues) {
    std::snprintf(buf, sizeof buf, "%.17g", ev.real());
    out << buf << ",";
    std::snprintf(buf, sizeof buf, "%.17g", ev.imag());
    out << buf << "\n";
  }
  return out.str();
}

std::string frame_path_csv(const FramePath& path) {
  std::ostringstream out;
  out << "tau";
  if (!path.frames.empty()) {
    const auto& first = path.frames.front().columns;
    for (int c = 0; c < first.cols(); ++c) {
      for (int r = 0; r < first.rows(); ++r) {
        out << ",z" << c + 1 << "_" << r + 1;
      }
    }
  }
  out << "\n";
  char buf[32];
  for (int i = 0; i < path.grid.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", path.grid(i));
    out << buf;
    const auto& cols = path.frames[static_cast<size_t>(i)].columns;
    for (int c = 0; c < cols.cols(); ++c) {
      for (int r = 0; r < cols.rows(); ++r) {
        std::snprintf(buf, sizeof buf, "%.17g", cols(r, c));
        out << "," << buf;
      }
    }
    out << "\n";
  }
  return out.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out << content;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

} // namespace pulsestab
