// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>

#include "evansflow/model.hpp"

namespace evansflow {

struct ShockTriple {
  Vec v_minus, v_plus;
  Real s = 0.0;
};

struct ShockFamily {
  std::vector<Real> eps_values;  // increasing
  std::vector<ShockTriple> triples;
  Real mu_k0 = 0.0;  // limiting speed s(0)

  bool empty() const { return eps_values.empty(); }
  const ShockTriple& at_eps(Real eps) const;
  bool contains(Real eps) const;
};

struct ShockSolveOptions {
  Real rh_tol = 1e-12;  // absolute residual
  int newton_max_iter = 50;
  int uniqueness_seeds = 8;
  Real lax_margin = 1e-9;
  Real family_slope_coeff = 100.0;  // |s'(0)| <= coeff * eps
};

Real rh_residual(const ModelSpec& model, const ShockTriple& triple);

// Newton solve with (v+-)_k = +-eps pinned and the off-k components of
// v+ + v- forced to zero, which closes the system and realizes the
// symmetric small-amplitude family.
ShockTriple solve_rankine_hugoniot(const ModelSpec& model, Real eps,
                                   std::optional<ShockTriple> guess = {},
                                   const ShockSolveOptions& opt = {});

std::optional<int> classify_lax(const ModelSpec& model, const ShockTriple& triple,
                                const ShockSolveOptions& opt = {});

ShockFamily build_shock_family(const ModelSpec& model, const std::vector<Real>& eps_list,
                               const ShockSolveOptions& opt = {});

}  // namespace evansflow
