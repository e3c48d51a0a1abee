#include <doctest.h>

#include "fixtures.hpp"
#include "pulsestab/config.hpp"
#include "pulsestab/io.hpp"

using namespace pulsestab;

namespace {

const char* kScalarConfig = R"({
  "model": {"kind": "scalar"},
  "pulse": {"half_width": 20.0, "num_intervals": 800, "tol": 1e-10},
  "spectrum": {"N": 600},
  "evolve": {"dt": 0.005, "t_final": 4.0, "rng_seed": 7}
})";

} // namespace

TEST_CASE("config parsing with defaults and overrides") {
  const RunConfig cfg = parse_config_text(kScalarConfig, "test");
  CHECK(cfg.model_kind == "scalar");
  CHECK(cfg.pulse.half_width == 20.0);
  CHECK(cfg.pulse.num_intervals == 800);
  CHECK(cfg.pulse.tail_tol == 1e-7); // default
  CHECK(cfg.spectrum.num_intervals == 600);
  CHECK(cfg.index.lambda_samples == 240); // default
  CHECK(cfg.evolve.dt == 0.005);
  CHECK(cfg.rng_seed == 7);
  CHECK(cfg.config_hash.size() == 16);

  const SkewGradientModel model = cfg.make_model();
  CHECK(model.n == 1);
}

TEST_CASE("unknown configuration keys are rejected with their path") {
  CHECK_THROWS_WITH_AS(
      parse_config_text(R"({"model": {"kind": "scalar"}, "pulze": {}})", "cfg"),
      doctest::Contains("pulze"), Error);
  CHECK_THROWS_WITH_AS(
      parse_config_text(R"({"model": {"kind": "scalar", "gamm": 1.0}})", "cfg"),
      doctest::Contains("model.gamm"), Error);
  CHECK_THROWS_WITH_AS(parse_config_text(R"({"model": {"kind": "weird"}})", "cfg"),
                       doctest::Contains("kind"), Error);
  CHECK_THROWS_WITH_AS(parse_config_text("{not json", "cfg"),
                       doctest::Contains("cfg"), Error);
}

TEST_CASE("polynomial model section") {
  const char* text = R"({
    "model": {
      "kind": "polynomial", "n": 1, "activators": 1,
      "m_diag": [1.0], "d_diag": [1.0],
      "terms": [{"coeff": 0.3333333333333333, "exponents": [3]},
                 {"coeff": -0.5, "exponents": [2]}]
    }
  })";
  const RunConfig cfg = parse_config_text(text, "poly");
  const SkewGradientModel model = cfg.make_model();
  CHECK(model.n == 1);
  CHECK(model.grad_v(Vec::Constant(1, 1.5))(0) == doctest::Approx(0.75));
}

TEST_CASE("config hash is stable and content sensitive") {
  const RunConfig a = parse_config_text(kScalarConfig, "a");
  const RunConfig b = parse_config_text(kScalarConfig, "b");
  CHECK(a.config_hash == b.config_hash);
  const RunConfig c =
      parse_config_text(R"({"model": {"kind": "fhn", "beta": 0.25}})", "c");
  CHECK(a.config_hash != c.config_hash);
}

TEST_CASE("reports serialize deterministically with hash and version") {
  HypothesisReport hyp;
  hyp.h1_holds = true;
  hyp.c2 = 0.25;
  hyp.c1 = 2.1;
  hyp.lambda_hat = 2.1;
  hyp.epsilon_max = 0.125;
  const std::string once = hypothesis_report_json(hyp, "0123456789abcdef");
  const std::string twice = hypothesis_report_json(hyp, "0123456789abcdef");
  CHECK(once == twice);
  CHECK(once.find("\"config_hash\": \"0123456789abcdef\"") != std::string::npos);
  CHECK(once.find("\"version\"") != std::string::npos);
  CHECK(once.find("\"c3_h2\": null") != std::string::npos); // vacuous margin

  IndexReport report;
  report.i_w0 = 1;
  report.spectral_flow = 1;
  report.verdict = Stability::Unstable;
  CrossingRecord rec;
  rec.location = 0.5;
  rec.intersection_dim = 1;
  rec.signature = 1;
  rec.form_eigenvalues = Vec::Constant(1, 0.6);
  report.crossings.push_back(rec);
  const std::string json = index_report_json(report, "hash");
  CHECK(json.find("\"i_w0\": 1") != std::string::npos);
  CHECK(json.find("\"verdict\": \"Unstable\"") != std::string::npos);

  const std::string csv = crossings_csv(report.crossings);
  CHECK(csv.find("location,intersection_dim,signature,form_eigenvalues") == 0);
  CHECK(csv.find("0.5,1,1,") != std::string::npos);
}

TEST_CASE("eigenvalue and frame-path CSV emitters") {
  std::vector<std::complex<double>> eigs = {{1.25, 0.0}, {-0.5, 0.25}};
  const std::string csv = eigenvalues_csv(eigs);
  CHECK(csv.find("re,im") == 0);
  CHECK(csv.find("1.25,0") != std::string::npos);
  CHECK(csv.find("-0.5,0.25") != std::string::npos);

  FramePath path;
  path.grid = Vec::LinSpaced(3, 0.0, 1.0);
  for (int i = 0; i < 3; ++i) {
    path.frames.push_back(reference_lagrangian(1, 1));
  }
  const std::string frames = frame_path_csv(path);
  CHECK(frames.find("tau,z1_1,z1_2") == 0);
}
