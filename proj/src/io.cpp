// SPDX-License-Identifier: Apache-2.0
#include "evansflow/io.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace evansflow {

using nlohmann::json;

std::string format_real(Real x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

std::string format_json_number(Real x) {
  if (!std::isfinite(x)) return "null";
  return format_real(x);
}

namespace {

PolyMap parse_poly_map(const json& terms, int n) {
  PolyMap map(static_cast<size_t>(n), Polynomial(n));
  for (const auto& t : terms) {
    const int comp = t.at("component").get<int>();
    if (comp < 0 || comp >= n) throw ConfigError("component index out of range");
    const auto exps = t.at("exponents").get<std::vector<int>>();
    if (static_cast<int>(exps.size()) != n)
      throw ConfigError("exponent list length must equal n");
    Polynomial::Exponents e{};
    for (int j = 0; j < n; ++j) {
      if (exps[static_cast<size_t>(j)] < 0) throw ConfigError("negative exponent");
      e[j] = exps[static_cast<size_t>(j)];
    }
    map[static_cast<size_t>(comp)].add_term(e, t.at("coefficient").get<Real>());
  }
  for (auto& p : map) p.canonicalize();
  return map;
}

json poly_map_to_json(const PolyMap& map, int n) {
  json out = json::array();
  for (size_t comp = 0; comp < map.size(); ++comp) {
    for (const auto& t : map[comp].terms()) {
      json jt;
      jt["component"] = static_cast<int>(comp);
      std::vector<int> exps(static_cast<size_t>(n));
      for (int j = 0; j < n; ++j) exps[static_cast<size_t>(j)] = t.exp[j];
      jt["exponents"] = exps;
      jt["coefficient"] = t.coeff;
      out.push_back(jt);
    }
  }
  return out;
}

}  // namespace

ModelSpec load_model_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("model config parse error: ") + e.what());
  }
  try {
    const int n = j.at("n").get<int>();
    const int k = j.at("k").get<int>();
    PolyMap f = parse_poly_map(j.at("f"), n);
    PolyMap g = parse_poly_map(j.at("g"), n);
    Mat B(n, n);
    const auto brows = j.at("B");
    for (int i = 0; i < n; ++i)
      for (int c = 0; c < n; ++c) B(i, c) = brows.at(i).at(c).get<Real>();
    Vec u_star(n);
    for (int i = 0; i < n; ++i) u_star[i] = j.at("u_star").at(i).get<Real>();
    const Real delta = j.at("delta").get<Real>();
    return ModelSpec(n, k, std::move(f), std::move(g), std::move(B),
                     std::move(u_star), delta);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("model config field error: ") + e.what());
  }
}

ModelSpec load_model_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open model config: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return load_model_json(ss.str());
}

std::string model_to_json(const ModelSpec& m) {
  json j;
  j["n"] = m.n();
  j["k"] = m.k();
  j["f"] = poly_map_to_json(m.f(), m.n());
  j["g"] = poly_map_to_json(m.g(), m.n());
  json b = json::array();
  for (int i = 0; i < m.n(); ++i) {
    json row = json::array();
    for (int c = 0; c < m.n(); ++c) row.push_back(m.B()(i, c));
    b.push_back(row);
  }
  j["B"] = b;
  json us = json::array();
  for (int i = 0; i < m.n(); ++i) us.push_back(m.u_star()[i]);
  j["u_star"] = us;
  j["delta"] = m.delta();
  return j.dump(2);
}

void write_family_csv(const std::filesystem::path& path, const ShockFamily& family) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  const int n = family.empty() ? 0 : static_cast<int>(family.triples[0].v_minus.size());
  out << "eps,s";
  for (int i = 0; i < n; ++i) out << ",v_minus" << i;
  for (int i = 0; i < n; ++i) out << ",v_plus" << i;
  out << "\n";
  for (size_t r = 0; r < family.eps_values.size(); ++r) {
    out << format_real(family.eps_values[r]) << "," << format_real(family.triples[r].s);
    for (int i = 0; i < n; ++i) out << "," << format_real(family.triples[r].v_minus[i]);
    for (int i = 0; i < n; ++i) out << "," << format_real(family.triples[r].v_plus[i]);
    out << "\n";
  }
}

ShockFamily read_family_csv(const std::filesystem::path& path, Real mu_k0) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("empty family file");
  int cols = 1;
  for (char c : line)
    if (c == ',') cols++;
  const int n = (cols - 2) / 2;
  ShockFamily fam;
  fam.mu_k0 = mu_k0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<Real> vals;
    while (std::getline(ss, cell, ',')) vals.push_back(std::strtod(cell.c_str(), nullptr));
    if (static_cast<int>(vals.size()) != 2 + 2 * n)
      throw ConfigError("malformed family row");
    ShockTriple t;
    t.v_minus = Vec(n);
    t.v_plus = Vec(n);
    t.s = vals[1];
    for (int i = 0; i < n; ++i) t.v_minus[i] = vals[static_cast<size_t>(2 + i)];
    for (int i = 0; i < n; ++i) t.v_plus[i] = vals[static_cast<size_t>(2 + n + i)];
    fam.eps_values.push_back(vals[0]);
    fam.triples.push_back(t);
  }
  return fam;
}

void write_profile_csv(const std::filesystem::path& path, const ProfileGrid& grid) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  const int n = static_cast<int>(grid.phi.rows());
  out << "x,chi";
  for (int i = 0; i < n; ++i) out << ",phi" << i;
  out << "\n";
  for (int c = 0; c < grid.x.size(); ++c) {
    out << format_real(grid.x[c]) << "," << format_real(grid.chi[c]);
    for (int i = 0; i < n; ++i) out << "," << format_real(grid.phi(i, c));
    out << "\n";
  }
}

void write_dispersion_csv(const std::filesystem::path& path, const SKReport& minus,
                          const SKReport& plus) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << "xi,max_Re_lambda_minus,max_Re_lambda_plus,bound\n";
  const Real theta = std::min(minus.theta, plus.theta);
  for (int i = 0; i < minus.xi_grid.size(); ++i) {
    const Real xi = minus.xi_grid[i];
    out << format_real(xi) << "," << format_real(minus.max_re_lambda[i]) << ","
        << format_real(plus.max_re_lambda[i]) << ","
        << format_real(-theta * xi * xi / (1.0 + xi * xi)) << "\n";
  }
}

void write_evans_sweep_csv(const std::filesystem::path& path,
                           const std::vector<EvansSweepRow>& rows) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << "re_kappa,im_kappa,re_E,im_E,regime,cond\n";
  for (const auto& r : rows) {
    out << format_real(r.kappa.real()) << "," << format_real(r.kappa.imag()) << ","
        << format_real(r.value.real()) << "," << format_real(r.value.imag()) << ","
        << regime_name(r.regime) << "," << format_real(r.sigma_min) << "\n";
  }
}

std::string zero_count_to_json(const ZeroCountReport& rep) {
  std::ostringstream out;
  out << "{\n";
  out << "  \"E0\": [" << format_json_number(rep.E0.real()) << ", "
      << format_json_number(rep.E0.imag()) << "],\n";
  out << "  \"closure_drift\": " << format_json_number(rep.closure_drift) << ",\n";
  out << "  \"contour_params\": {\"R\": " << format_json_number(rep.R)
      << ", \"delta\": " << format_json_number(rep.delta) << ", \"samples\": " << rep.samples
      << "},\n";
  out << "  \"dE0\": [" << format_json_number(rep.dE0.real()) << ", "
      << format_json_number(rep.dE0.imag()) << "],\n";
  out << "  \"e0_rel\": " << format_json_number(rep.e0_rel) << ",\n";
  out << "  \"instability_detected\": " << (rep.instability_detected ? "true" : "false")
      << ",\n";
  out << "  \"median_log_abs\": " << format_json_number(rep.median_log_abs) << ",\n";
  out << "  \"min_sigma\": " << format_json_number(rep.min_sigma) << ",\n";
  out << "  \"winding\": " << rep.winding << "\n";
  out << "}\n";
  return out.str();
}

int log_level() {
  static const int level = [] {
    const char* env = std::getenv("EVANSFLOW_LOG");
    return env ? std::atoi(env) : 0;
  }();
  return level;
}

void log_line(int level, const std::string& msg) {
  if (log_level() >= level) std::fprintf(stderr, "[evansflow] %s\n", msg.c_str());
}

}  // namespace evansflow
