// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>

#include <json.hpp>

#include "evansflow/runner.hpp"
#include "test_util.hpp"

using namespace evansflow;

namespace {

std::filesystem::path write_temp(const std::string& name, const std::string& text) {
  const auto dir = std::filesystem::temp_directory_path() / "evansflow_tests";
  std::filesystem::create_directories(dir);
  const auto path = dir / name;
  std::ofstream out(path);
  out << text;
  return path;
}

const char* kModelHb = R"({
  "n": 1, "k": 1,
  "f": [ { "component": 0, "exponents": [2], "coefficient": -1.0 } ],
  "g": [ { "component": 0, "exponents": [1], "coefficient": 1.0 } ],
  "B": [ [1.0] ],
  "u_star": [0.0],
  "delta": 0.6
})";

const char* kModelFlipped = R"({
  "n": 1, "k": 1,
  "f": [ { "component": 0, "exponents": [2], "coefficient": 1.0 } ],
  "g": [ { "component": 0, "exponents": [1], "coefficient": 1.0 } ],
  "B": [ [1.0] ],
  "u_star": [0.0],
  "delta": 0.6
})";

}  // namespace

TEST_CASE("model config round-trips through JSON") {
  ModelSpec m = load_model_json(kModelHb);
  CHECK(m.n() == 1);
  CHECK(m.k() == 1);
  ModelSpec m2 = load_model_json(model_to_json(m));
  CHECK(m2.f()[0].coefficient({2, 0, 0, 0, 0, 0, 0, 0}) == -1.0);
  CHECK(m2.delta() == 0.6);
  CHECK_THROWS_AS(load_model_json("{ not json"), ConfigError);
}

TEST_CASE("family CSV round-trip") {
  ModelSpec m = testutil::model_hb();
  ShockFamily fam = build_shock_family(m, {0.05, 0.1});
  const auto path = write_temp("family.csv", "");
  write_family_csv(path, fam);
  ShockFamily fam2 = read_family_csv(path, fam.mu_k0);
  REQUIRE(fam2.eps_values.size() == 2);
  CHECK(fam2.triples[1].v_plus[0] == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(fam2.triples[1].s == doctest::Approx(fam.triples[1].s).epsilon(1e-15));
}

TEST_CASE("validation-only run exits 0") {
  const auto model = write_temp("m_hb.json", kModelHb);
  const auto config = write_temp("exp_validate.json", std::string(R"({
    "model": ")") + model.string() + R"(",
    "eps_list": []
  })");
  ExperimentConfig cfg = ExperimentConfig::from_file(config);
  cfg.out_dir = std::filesystem::temp_directory_path() / "evansflow_tests" / "out_v";
  RunReport rep = run_experiment(cfg);
  CHECK(rep.exit_code == 0);
  CHECK(rep.verdict == "validated");
  CHECK(rep.scalars.at("gnl_value") == doctest::Approx(-2.0).epsilon(1e-6));
}

TEST_CASE("flipped flux fails validation with exit 2") {
  const auto model = write_temp("m_flip.json", kModelFlipped);
  const auto config = write_temp("exp_flip.json", std::string(R"({
    "model": ")") + model.string() + R"(",
    "eps_list": [0.2]
  })");
  ExperimentConfig cfg = ExperimentConfig::from_file(config);
  cfg.out_dir = std::filesystem::temp_directory_path() / "evansflow_tests" / "out_f";
  RunReport rep = run_experiment(cfg);
  CHECK(rep.exit_code == 2);
  CHECK(rep.stages.front().status == "failed");
}

TEST_CASE("pipeline through dispersion is deterministic") {
  const auto model = write_temp("m_hb.json", kModelHb);
  const auto config = write_temp("exp_hb.json", std::string(R"({
    "model": ")") + model.string() + R"(",
    "eps_list": [0.2]
  })");
  ExperimentConfig cfg = ExperimentConfig::from_file(config);
  const auto out1 = std::filesystem::temp_directory_path() / "evansflow_tests" / "o1";
  const auto out2 = std::filesystem::temp_directory_path() / "evansflow_tests" / "o2";

  cfg.out_dir = out1;
  RunReport r1 = run_experiment(cfg, Stage::dispersion);
  cfg.out_dir = out2;
  RunReport r2 = run_experiment(cfg, Stage::dispersion);
  CHECK(r1.exit_code == 0);
  CHECK(r2.exit_code == 0);

  for (const char* name : {"validate.json", "family.csv", "dispersion.csv"}) {
    std::ifstream a(out1 / name), b(out2 / name);
    std::stringstream sa, sb;
    sa << a.rdbuf();
    sb << b.rdbuf();
    CHECK(sa.str() == sb.str());
    CHECK(!sa.str().empty());
  }
}

TEST_CASE("report serialization is deterministic and round-trips") {
  RunReport rep;
  rep.verdict = "stable";
  rep.exit_code = 0;
  rep.scalars["winding"] = 0.0;
  rep.scalars["gnl_value"] = -2.0;
  StageResult st;
  st.name = "validate";
  st.status = "ok";
  rep.stages.push_back(st);
  const std::string j1 = emit_report(rep, ReportFormat::json);
  const std::string j2 = emit_report(rep, ReportFormat::json);
  CHECK(j1 == j2);
  auto parsed = nlohmann::json::parse(j1);
  CHECK(parsed.at("verdict") == "stable");
  CHECK(parsed.at("scalars").at("gnl_value") == -2.0);
  const std::string text = emit_report(rep, ReportFormat::text);
  CHECK(text.find("verdict: stable") != std::string::npos);
}

TEST_CASE("zero-count report serializes to parseable JSON") {
  ZeroCountReport rep;
  rep.winding = 0;
  rep.E0 = Complex(1e-12, 0);
  rep.dE0 = Complex(0.5, -0.1);
  rep.R = 10.0;
  rep.delta = 4e-5;
  const std::string j = zero_count_to_json(rep);
  auto parsed = nlohmann::json::parse(j);
  CHECK(parsed.at("winding") == 0);
  CHECK(parsed.at("contour_params").at("R") == 10.0);
}
