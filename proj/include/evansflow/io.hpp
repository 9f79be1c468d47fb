// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>

#include "evansflow/evans.hpp"
#include "evansflow/model.hpp"
#include "evansflow/profile.hpp"
#include "evansflow/shock.hpp"

namespace evansflow {

// Model config document: {"n":., "k":., "f":[{"component":., "exponents":[..],
// "coefficient":.}], "g":[...], "B":[[..]], "u_star":[..], "delta":.}
ModelSpec load_model_json(const std::string& text);
ModelSpec load_model_file(const std::filesystem::path& path);
std::string model_to_json(const ModelSpec& model);

std::string format_real(Real x);  // fixed 17-significant-digit formatting
std::string format_json_number(Real x);  // like format_real; null if not finite

void write_family_csv(const std::filesystem::path& path, const ShockFamily& family);
ShockFamily read_family_csv(const std::filesystem::path& path, Real mu_k0);

void write_profile_csv(const std::filesystem::path& path, const ProfileGrid& grid);

void write_dispersion_csv(const std::filesystem::path& path, const SKReport& minus,
                          const SKReport& plus);

struct EvansSweepRow {
  Complex kappa;
  Complex value;
  Regime regime = Regime::outer;
  Real sigma_min = 0.0;
};
void write_evans_sweep_csv(const std::filesystem::path& path,
                           const std::vector<EvansSweepRow>& rows);

std::string zero_count_to_json(const ZeroCountReport& rep);

int log_level();  // EVANSFLOW_LOG: 0 quiet (default), 1 stages, 2 debug
void log_line(int level, const std::string& msg);

}  // namespace evansflow
