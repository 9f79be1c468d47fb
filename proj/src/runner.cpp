// SPDX-License-Identifier: Apache-2.0
#include "evansflow/runner.hpp"

#include <chrono>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace evansflow {

using nlohmann::json;

ExperimentConfig ExperimentConfig::from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("experiment config parse error: ") + e.what());
  }
  ExperimentConfig c;
  try {
    c.model_path = j.at("model").get<std::string>();
    if (j.contains("eps_list")) c.eps_list = j["eps_list"].get<std::vector<Real>>();
    c.r0 = j.value("r0", c.r0);
    c.r1 = j.value("r1", c.r1);
    c.R = j.value("R", c.R);
    c.delta_factor = j.value("delta_factor", c.delta_factor);
    c.arc_nodes = j.value("arc_nodes", c.arc_nodes);
    c.segment_nodes = j.value("segment_nodes", c.segment_nodes);
    c.profile_tol = j.value("profile_tol", c.profile_tol);
    c.L_factor = j.value("L_factor", c.L_factor);
    c.tau_nodes = j.value("tau_nodes", c.tau_nodes);
    c.sample_count = j.value("sample_count", c.sample_count);
    c.workers = j.value("workers", c.workers);
    c.seed = j.value("seed", c.seed);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("experiment config field error: ") + e.what());
  }
  for (Real t : {c.r0, c.r1, c.R, c.delta_factor, c.profile_tol}) {
    if (!(t > 0)) throw ConfigError("tolerances and radii must be positive");
  }
  for (size_t i = 0; i + 1 < c.eps_list.size(); ++i)
    if (c.eps_list[i + 1] <= c.eps_list[i])
      throw ConfigError("eps_list must be strictly increasing");
  return c;
}

ExperimentConfig ExperimentConfig::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open experiment config: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  ExperimentConfig c = from_json(ss.str());
  if (c.model_path.is_relative()) c.model_path = path.parent_path() / c.model_path;
  return c;
}

Stage stage_from_name(const std::string& name) {
  if (name == "validate") return Stage::validate;
  if (name == "family") return Stage::family;
  if (name == "profile") return Stage::profile;
  if (name == "dispersion") return Stage::dispersion;
  if (name == "evans-sweep") return Stage::evans_sweep;
  if (name == "zero-count") return Stage::zero_count;
  if (name == "full") return Stage::full;
  throw ConfigError("unknown stage: " + name);
}

namespace {

struct StageClock {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  Real seconds() const {
    return std::chrono::duration<Real>(std::chrono::steady_clock::now() - t0).count();
  }
};

}  // namespace

RunReport run_experiment(const ExperimentConfig& config, Stage through) {
  RunReport rep;
  std::filesystem::create_directories(config.out_dir);
  const int last = static_cast<int>(through);

  std::optional<NormalizationResult> norm;
  std::optional<ShockFamily> family;
  std::optional<FenichelData> fen;
  std::optional<SlowManifold> slow;
  std::optional<ProfileGrid> profile;
  Real eps_main = config.eps_list.empty() ? 0.0 : config.eps_list.back();

  auto run_stage = [&](Stage st, const std::string& name, auto&& body) {
    if (static_cast<int>(st) > last) return true;
    StageResult res;
    res.name = name;
    StageClock clock;
    try {
      log_line(1, "stage " + name);
      body(res);
      res.status = "ok";
    } catch (const Error& e) {
      res.status = "failed";
      res.message = e.what();
    } catch (const std::exception& e) {
      res.status = "failed";
      res.message = e.what();
    }
    res.seconds = clock.seconds();
    rep.stages.push_back(res);
    return res.status == std::string("ok");
  };

  bool ok = run_stage(Stage::validate, "validate", [&](StageResult& res) {
    ModelSpec raw = load_model_file(config.model_path);
    AssumptionReport pre = validate_assumptions(raw, config.sample_count, config.seed);
    if (!pre.passed()) throw Error("assumptions fail: " + std::string(!pre.a1 ? "A1 " : "") +
                                   (!pre.a2 ? "A2 " : "") + (!pre.a3 ? "A3 " : "") +
                                   (!pre.a4 ? "A4" : ""));
    norm = normalize_model(raw);
    AssumptionReport post = validate_assumptions(norm->model, config.sample_count, config.seed);
    if (!post.passed()) throw Error("normalized model fails validation");
    const Real gnl = genuine_nonlinearity_coeff(norm->model);
    rep.scalars["gnl_value"] = gnl;
    rep.scalars["a_value"] = post.a_value;
    rep.scalars["gamma0"] = post.gamma0;
    rep.scalars["margin_subchar"] = post.margin_subchar;
    rep.scalars["eigenvalue_gap"] = post.eigenvalue_gap;
    std::ofstream out(config.out_dir / "validate.json");
    out << "{\n  \"a1\": " << (post.a1 ? "true" : "false")
        << ",\n  \"a2\": " << (post.a2 ? "true" : "false")
        << ",\n  \"a3\": " << (post.a3 ? "true" : "false")
        << ",\n  \"a4\": " << (post.a4 ? "true" : "false")
        << ",\n  \"a_value\": " << format_json_number(post.a_value)
        << ",\n  \"ball_metric_margin\": " << format_json_number(post.ball_metric_margin)
        << ",\n  \"ball_speed_margin\": " << format_json_number(post.ball_speed_margin)
        << ",\n  \"ball_subchar_margin\": " << format_json_number(post.ball_subchar_margin)
        << ",\n  \"eigenvalue_gap\": " << format_json_number(post.eigenvalue_gap)
        << ",\n  \"gamma0\": " << format_json_number(post.gamma0)
        << ",\n  \"gnl_value\": " << format_json_number(post.gnl_value)
        << ",\n  \"margin_B\": " << format_json_number(post.margin_B)
        << ",\n  \"margin_Dg\": " << format_json_number(post.margin_Dg)
        << ",\n  \"margin_subchar\": " << format_json_number(post.margin_subchar) << "\n}\n";
    rep.manifest.push_back((config.out_dir / "validate.json").string());
    res.message = "gnl_value=" + format_real(gnl);
  });

  if (ok && !config.eps_list.empty()) {
    ok = run_stage(Stage::family, "family", [&](StageResult& res) {
      family = build_shock_family(norm->model, config.eps_list);
      write_family_csv(config.out_dir / "family.csv", *family);
      rep.manifest.push_back((config.out_dir / "family.csv").string());
      rep.scalars["s_eps_max"] = family->triples.back().s;
      res.message = "members=" + std::to_string(family->eps_values.size());
    });

    ok = ok && run_stage(Stage::profile, "profile", [&](StageResult& res) {
      for (size_t i = 0; i < config.eps_list.size(); ++i) {
        const Real eps = config.eps_list[i];
        FenichelData f(norm->model, *family, eps);
        SlowManifold sm = compute_slow_manifold(f, config.tau_nodes);
        const Real decay = eps * std::abs(f.gamma0() * f.a());
        const Real L = config.L_factor / decay;
        ProfileOptions popt;
        popt.tol = config.profile_tol;
        ProfileGrid grid = integrate_profile(f, sm, L, popt);
        const auto path = config.out_dir / ("profile_eps" + std::to_string(i) + ".csv");
        write_profile_csv(path, grid);
        rep.manifest.push_back(path.string());
        if (eps == eps_main) {
          fen = std::move(f);
          slow = std::move(sm);
          profile = std::move(grid);
        }
      }
      res.message = "profiles=" + std::to_string(config.eps_list.size());
    });

    ok = ok && run_stage(Stage::dispersion, "dispersion", [&](StageResult& res) {
      SpectralContext ctx(norm->model, *family, eps_main);
      DispersionReport dr = dispersion_margin(ctx, {}, config.R);
      if (!dr.boundary_consistent)
        throw Error("consistent splitting fails on the dispersion-region boundary");
      write_dispersion_csv(config.out_dir / "dispersion.csv", dr.minus, dr.plus);
      rep.manifest.push_back((config.out_dir / "dispersion.csv").string());
      rep.scalars["nu"] = dr.nu;
      rep.scalars["theta"] = std::min(dr.minus.theta, dr.plus.theta);
      res.message = "nu=" + format_real(dr.nu);
    });

    std::optional<EvansEvaluator> evaluator;
    if (ok && profile && static_cast<int>(Stage::evans_sweep) <= last) {
      SpectralContext ctx(norm->model, *family, eps_main);
      evaluator.emplace(std::move(ctx), &*profile);
    }

    ok = ok && run_stage(Stage::evans_sweep, "evans-sweep", [&](StageResult& res) {
      const Real delta = config.delta_factor * eps_main * eps_main;
      const Contour contour =
          Contour::half_annulus(delta, config.R, config.arc_nodes, config.segment_nodes);
      std::vector<EvansSweepRow> rows(contour.nodes.size());
      BoundaryFrames frames = evaluator->init_frames(contour.nodes[0], Scaling::standard);
      std::vector<BoundaryFrames> all_frames;
      all_frames.push_back(frames);
      for (size_t i = 1; i < contour.nodes.size(); ++i)
        all_frames.push_back(evaluator->continue_frames(all_frames.back(), contour.nodes[i]));
      for (size_t i = 0; i < contour.nodes.size(); ++i) {
        const EvansSample s = evaluator->evaluate(all_frames[i]);
        rows[i] = EvansSweepRow{contour.nodes[i], s.value(),
                                regime_partition(eps_main, contour.nodes[i], config.r0,
                                                 config.r1),
                                s.sigma_min};
      }
      write_evans_sweep_csv(config.out_dir / "evans_sweep.csv", rows);
      rep.manifest.push_back((config.out_dir / "evans_sweep.csv").string());
      res.message = "nodes=" + std::to_string(rows.size());
    });

    ok = ok && run_stage(Stage::zero_count, "zero-count", [&](StageResult& res) {
      ZeroCountOptions zopt;
      zopt.r0 = config.r0;
      zopt.r1 = config.r1;
      zopt.arc_nodes = config.arc_nodes;
      zopt.segment_nodes = config.segment_nodes;
      zopt.workers = config.workers;
      const Real delta = config.delta_factor * eps_main * eps_main;
      ZeroCountReport zc = count_zeros_halfplane(*evaluator, config.R, delta, zopt);
      std::ofstream out(config.out_dir / "zero_count.json");
      out << zero_count_to_json(zc);
      rep.manifest.push_back((config.out_dir / "zero_count.json").string());
      rep.scalars["winding"] = zc.winding;
      rep.scalars["E0_abs"] = std::abs(zc.E0);
      rep.scalars["dE0_abs"] = std::abs(zc.dE0);
      rep.scalars["e0_rel"] = zc.e0_rel;
      rep.scalars["min_sigma"] = zc.min_sigma;
      if (zc.instability_detected) {
        rep.verdict = "unstable";
        res.message = "winding=" + std::to_string(zc.winding);
      } else if (zc.e0_rel < 1e-8 && std::abs(zc.dE0) > 0) {
        rep.verdict = "stable";
        res.message = "winding=0, simple zero at the origin";
      } else {
        rep.verdict = "inconclusive";
        res.message = "origin diagnostics inconclusive";
      }
    });
  } else if (ok) {
    rep.verdict = "validated";
  }

  if (!ok && rep.verdict == "inconclusive") rep.verdict = "invalid";
  if (rep.verdict == "stable" || rep.verdict == "validated")
    rep.exit_code = 0;
  else if (rep.verdict == "unstable" || rep.verdict == "inconclusive")
    rep.exit_code = 1;
  else
    rep.exit_code = 2;

  // stop at the requested stage with a clean verdict for partial runs
  if (through != Stage::full && through != Stage::zero_count && ok &&
      rep.verdict == "inconclusive") {
    rep.verdict = "partial";
    rep.exit_code = 0;
  }
  return rep;
}

std::string emit_report(const RunReport& rep, ReportFormat format) {
  if (format == ReportFormat::json) {
    std::ostringstream out;
    out << "{\n  \"exit_code\": " << rep.exit_code << ",\n";
    out << "  \"manifest\": [";
    for (size_t i = 0; i < rep.manifest.size(); ++i)
      out << (i ? ", " : "") << '"' << rep.manifest[i] << '"';
    out << "],\n  \"scalars\": {";
    size_t c = 0;
    for (const auto& [k, v] : rep.scalars)
      out << (c++ ? ", " : "") << '"' << k << "\": " << format_json_number(v);
    out << "},\n  \"stages\": [";
    // timings stay out of the machine-readable report so identical runs
    // serialize byte-identically
    for (size_t i = 0; i < rep.stages.size(); ++i) {
      const auto& s = rep.stages[i];
      out << (i ? ", " : "") << "{\"message\": \"" << s.message << "\", \"name\": \""
          << s.name << "\", \"status\": \"" << s.status << "\"}";
    }
    out << "],\n  \"verdict\": \"" << rep.verdict << "\"\n}\n";
    return out.str();
  }
  std::ostringstream out;
  out << "stage        status   seconds    message\n";
  for (const auto& s : rep.stages) {
    out << s.name;
    for (size_t p = s.name.size(); p < 13; ++p) out << ' ';
    out << s.status;
    for (size_t p = s.status.size(); p < 9; ++p) out << ' ';
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%-10.3f", s.seconds);
    out << buf << " " << s.message << "\n";
  }
  for (const auto& [k, v] : rep.scalars) out << k << " = " << format_real(v) << "\n";
  out << "verdict: " << rep.verdict << "\n";
  return out.str();
}

}  // namespace evansflow
