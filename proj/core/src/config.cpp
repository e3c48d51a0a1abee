#include "pulsestab/config.hpp"

#include <fstream>
#include <json.hpp>
#include <set>
#include <sstream>

namespace pulsestab {

namespace {

using nlohmann::json;

void reject_unknown(const json& section, const std::set<std::string>& known,
                    const std::string& where) {
  for (auto it = section.begin(); it != section.end(); ++it) {
    if (!known.count(it.key())) {
      throw Error("config: unknown key '" + where + "." + it.key() + "'");
    }
  }
}

double number_at(const json& section, const char* key, double fallback) {
  if (!section.contains(key)) return fallback;
  if (!section[key].is_number()) throw Error(std::string("config: '") + key + "' must be a number");
  return section[key].get<double>();
}

int int_at(const json& section, const char* key, int fallback) {
  if (!section.contains(key)) return fallback;
  if (!section[key].is_number_integer()) {
    throw Error(std::string("config: '") + key + "' must be an integer");
  }
  return section[key].get<int>();
}

std::string fnv1a_hex(const std::string& text) {
  unsigned long long hash = 1469598103934665603ull;
  for (unsigned char c : text) {
    hash ^= c;
    hash *= 1099511628211ull;
  }
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx", hash);
  return buf;
}

} // namespace

SkewGradientModel RunConfig::make_model() const {
  if (model_kind == "fhn") return build_fhn(fhn_d, fhn_tau, fhn_gamma, fhn_beta);
  if (model_kind == "scalar") return build_scalar_bistable();
  if (model_kind == "polynomial") {
    return build_polynomial_model(poly_n, poly_activators, poly_m_diag, poly_d_diag,
                                  poly_terms);
  }
  throw Error("config: model.kind must be fhn | scalar | polynomial");
}

RunConfig parse_config_text(const std::string& text, const std::string& origin) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& err) {
    throw Error(origin + ": " + err.what());
  }
  reject_unknown(root, {"model", "pulse", "index", "spectrum", "evolve"}, origin);

  RunConfig cfg;
  cfg.config_hash = fnv1a_hex(root.dump());

  if (!root.contains("model")) throw Error(origin + ": missing 'model' section");
  {
    const json& model = root["model"];
    reject_unknown(model,
                   {"kind", "d", "tau", "gamma", "beta", "n", "activators", "m_diag",
                    "d_diag", "terms"},
                   origin + ".model");
    cfg.model_kind = model.value("kind", "");
    if (cfg.model_kind != "fhn" && cfg.model_kind != "scalar" &&
        cfg.model_kind != "polynomial") {
      throw Error(origin + ": model.kind must be fhn | scalar | polynomial");
    }
    cfg.fhn_d = number_at(model, "d", 1.0);
    cfg.fhn_tau = number_at(model, "tau", 1.0);
    cfg.fhn_gamma = number_at(model, "gamma", 1.0);
    cfg.fhn_beta = number_at(model, "beta", 0.5);
    if (cfg.model_kind == "polynomial") {
      cfg.poly_n = int_at(model, "n", 0);
      cfg.poly_activators = int_at(model, "activators", 0);
      if (!model.contains("m_diag") || !model.contains("d_diag") ||
          !model.contains("terms")) {
        throw Error(origin + ": polynomial model needs m_diag, d_diag and terms");
      }
      const auto as_vec = [&](const json& arr) {
        Vec v(arr.size());
        for (size_t i = 0; i < arr.size(); ++i) v(static_cast<int>(i)) = arr[i].get<double>();
        return v;
      };
      cfg.poly_m_diag = as_vec(model["m_diag"]);
      cfg.poly_d_diag = as_vec(model["d_diag"]);
      for (const auto& term : model["terms"]) {
        reject_unknown(term, {"coeff", "exponents"}, origin + ".model.terms[]");
        PolynomialTerm t;
        t.coeff = term["coeff"].get<double>();
        for (const auto& e : term["exponents"]) t.exponents.push_back(e.get<int>());
        cfg.poly_terms.push_back(t);
      }
    }
  }

  if (root.contains("pulse")) {
    const json& pulse = root["pulse"];
    reject_unknown(pulse, {"half_width", "num_intervals", "tol", "tail_tol", "seed"},
                   origin + ".pulse");
    cfg.pulse.half_width = number_at(pulse, "half_width", 0.0);
    cfg.pulse.num_intervals = int_at(pulse, "num_intervals", 3000);
    cfg.pulse.tol = number_at(pulse, "tol", 1e-10);
    cfg.pulse.tail_tol = number_at(pulse, "tail_tol", 1e-7);
    cfg.seed_profile_path = pulse.value("seed", "");
  }

  if (root.contains("index")) {
    const json& index = root["index"];
    reject_unknown(index,
                   {"lambda_max", "tau_samples", "lambda_samples", "crossing_tol"},
                   origin + ".index");
    cfg.index.lambda_max = number_at(index, "lambda_max", 0.0);
    cfg.index.tau_samples = int_at(index, "tau_samples", 0);
    cfg.index.lambda_samples = int_at(index, "lambda_samples", 240);
    cfg.index.crossing_tol = number_at(index, "crossing_tol", 1e-8);
  }

  if (root.contains("spectrum")) {
    const json& spectrum = root["spectrum"];
    reject_unknown(spectrum, {"N", "X", "tol_scale", "pulse_tol"}, origin + ".spectrum");
    cfg.spectrum.num_intervals = int_at(spectrum, "N", 2000);
    cfg.spectrum.half_width = number_at(spectrum, "X", 0.0);
    cfg.spectrum.tol_scale = number_at(spectrum, "tol_scale", 1e-6);
    cfg.spectrum.pulse_tol = number_at(spectrum, "pulse_tol", 1e-10);
  }

  if (root.contains("evolve")) {
    const json& evolve = root["evolve"];
    reject_unknown(evolve,
                   {"dt", "t_final", "num_snapshots", "perturbation", "rng_seed"},
                   origin + ".evolve");
    cfg.evolve.dt = number_at(evolve, "dt", 5e-3);
    cfg.evolve.t_final = number_at(evolve, "t_final", 10.0);
    cfg.evolve.num_snapshots = int_at(evolve, "num_snapshots", 200);
    cfg.perturbation_amplitude = number_at(evolve, "perturbation", 1e-4);
    if (evolve.contains("rng_seed")) {
      cfg.rng_seed = evolve["rng_seed"].get<unsigned long long>();
    }
  }

  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config_text(buffer.str(), path);
}

std::string config_reference() {
  return R"(Configuration file (JSON), sections and defaults:
  model.kind            fhn | scalar | polynomial         (required)
  model.d               FHN activator diffusion           (1.0)
  model.tau             FHN inhibitor time constant       (1.0)
  model.gamma           FHN inhibitor damping             (1.0)
  model.beta            FHN cubic parameter, in (0,1)     (0.5)
  model.n               polynomial: components            (required)
  model.activators      polynomial: activator count       (required)
  model.m_diag          polynomial: diag(M)               (required)
  model.d_diag          polynomial: diag(D)               (required)
  model.terms           polynomial: [{coeff, exponents}]  (required)
  pulse.half_width      domain half width X               (15 / decay rate)
  pulse.num_intervals   mesh intervals                    (3000)
  pulse.tol             Newton residual target            (1e-10)
  pulse.tail_tol        admissible tail amplitude         (1e-7)
  pulse.seed            path of an initial-guess profile  (built-in seed)
  index.lambda_max      spectral-flow right endpoint      (lambda_hat)
  index.tau_samples     conjugate-point scan samples      (4 per decay length)
  index.lambda_samples  spectral-flow scan samples        (240)
  index.crossing_tol    crossing detection tolerance      (1e-8)
  spectrum.N            eigensolver mesh intervals        (2000)
  spectrum.X            eigensolver half width            (profile X)
  spectrum.tol_scale    re/im tolerance scale             (1e-6)
  spectrum.pulse_tol    pulse tolerance (zero cluster)    (1e-10)
  evolve.dt             IMEX time step                    (5e-3)
  evolve.t_final        integration horizon               (10.0)
  evolve.num_snapshots  recorded snapshots                (200)
  evolve.perturbation   perturbation amplitude            (1e-4)
  evolve.rng_seed       perturbation RNG seed             (1)
)";
}

} // namespace pulsestab
