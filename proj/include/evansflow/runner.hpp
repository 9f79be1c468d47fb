// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>

#include "evansflow/io.hpp"

namespace evansflow {

struct ExperimentConfig {
  std::filesystem::path model_path;
  std::vector<Real> eps_list;
  Real r0 = 1.0, r1 = 0.25, R = 10.0;
  Real delta_factor = 1e-3;  // indentation radius = delta_factor * eps^2
  int arc_nodes = 32, segment_nodes = 24;
  Real profile_tol = 1e-10;
  Real L_factor = 10.0;  // truncation = L_factor / (eps |gamma0 a|)
  int tau_nodes = 65;
  int sample_count = 64;  // validation samples
  std::filesystem::path out_dir = "out";
  int workers = 1;
  unsigned seed = 0;

  static ExperimentConfig from_json(const std::string& text);
  static ExperimentConfig from_file(const std::filesystem::path& path);
};

struct StageResult {
  std::string name;
  std::string status = "skipped";  // ok | failed | skipped
  Real seconds = 0.0;
  std::string message;
};

struct RunReport {
  std::vector<StageResult> stages;
  std::map<std::string, Real> scalars;
  std::vector<std::string> manifest;
  std::string verdict = "inconclusive";  // stable | unstable | inconclusive | invalid
  int exit_code = 2;
};

enum class Stage { validate, family, profile, dispersion, evans_sweep, zero_count, full };
Stage stage_from_name(const std::string& name);

RunReport run_experiment(const ExperimentConfig& config, Stage through = Stage::full);

enum class ReportFormat { json, text };
std::string emit_report(const RunReport& report, ReportFormat format);

}  // namespace evansflow
