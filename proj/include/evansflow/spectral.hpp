// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

#include "evansflow/profile.hpp"

namespace evansflow {

enum class Scaling { standard, inner };

// Boosted-frame spectral data of one family member (or of the eps = 0 limit):
// assembles the first-order Laplace-mode matrices in both scalings.
class SpectralContext {
 public:
  SpectralContext(const ModelSpec& model, const ShockFamily& family, Real eps);
  static SpectralContext limit(const ModelSpec& model, Real mu_k0);

  Real eps() const { return eps_; }
  Real gamma0() const { return gamma0_; }
  Real a() const { return a_; }
  int n() const { return model_.n(); }
  int k_index() const { return model_.k_index(); }
  const ModelSpec& model() const { return model_; }
  const Vec& v_minus() const { return v_minus_; }
  const Vec& v_plus() const { return v_plus_; }
  Real s_eps() const { return s_; }

  Mat Df_eps(const Vec& v) const;
  Mat Dg_eps(const Vec& v) const;
  Mat Dg0() const { return Dg_eps0_; }  // Dg of the eps = 0 boost at the origin
  Mat Df0() const { return Df_eps0_; }
  Vec lambda_fast() const;  // eigenvalues of Df0 (diagonal in the normalized frame)
  Vec mu_boosted() const;   // eigenvalues of Df0 w.r.t. Dg0

  CMat standard_at_v(const Vec& v, Complex kappa) const;
  CMat inner_at_v(const Vec& v, Complex zeta) const;
  CMat standard_endpoint(int side, Complex kappa) const;  // side in {-1, +1}
  CMat inner_endpoint(int side, Complex zeta) const;

 private:
  SpectralContext(ModelSpec model, Real eps, Real s, Real gamma0, Real a,
                  Vec v_minus, Vec v_plus);
  ModelSpec model_;  // normalized, unboosted
  Real eps_, s_, gamma0_, a_;
  Vec v_minus_, v_plus_;
  Mat Df_eps0_, Dg_eps0_;
};

struct Location {
  bool is_tau = false;
  Real tau = 0.0;
  Vec v;
};

CMat assemble_spectral_matrix(const SpectralContext& ctx, Scaling scaling,
                              Complex param, const Location& loc,
                              const SlowManifold* slow = nullptr);

struct SplittingReport {
  int unstable_minus = 0, stable_minus = 0, center_minus = 0;
  int unstable_plus = 0, stable_plus = 0, center_plus = 0;
  Real gap = 0.0;  // min |Re lambda| over hyperbolic eigenvalues, both ends
  bool consistent = false;
};

SplittingReport endpoint_splitting(const SpectralContext& ctx, Complex kappa,
                                   Real center_tol = 1e-9);

struct SKReport {
  Mat K0;
  bool sk1 = false, sk2 = false;
  Real k0_margin = 0.0;      // smallest eigenvalue of K0
  Real k0q_max = 0.0;        // largest eigenvalue of K0 Q (want <= 0)
  Real theta = 0.0;          // decay coefficient on the xi grid
  Real xi0 = 0.0, c_xi0 = 0.0;
  Real nu = 0.0;             // admissible dispersion-region parameter
  Vec xi_grid, max_re_lambda;
};

struct SKOptions {
  Real xi_min = 1e-3, xi_max = 1e3;
  int xi_points = 200;
  Real xi0 = 0.1;
};

SKReport shizuta_kawashima_check(const Mat& F, const Mat& G, const SKOptions& opt = {});

struct DispersionReport {
  SKReport minus, plus;
  Real nu = 0.0;  // min of the endpoint values
  int boundary_samples = 0;
  bool boundary_consistent = false;
};

DispersionReport dispersion_margin(const SpectralContext& ctx, const SKOptions& opt = {},
                                   Real boundary_radius = 10.0, int boundary_samples = 16);

struct EigenGroupPrediction {
  std::string label;   // e.g. "fast-S[1]", "sf-U", "ss-S[2]"
  Complex predicted;   // leading-order value
  Complex matched;     // nearest eigenvalue of the assembled matrix
  Real residual = 0.0;
  int order = 0;       // 0: O(1) fast, 1: O(eps) slow-fast, 2: O(eps^2) super-slow
};

struct InnerExpansionReport {
  Complex nu1, nu2;
  std::vector<EigenGroupPrediction> minus, plus;
};

InnerExpansionReport inner_eigenvalue_expansion(const SpectralContext& ctx, Complex zeta);

// nu1/nu2 of the slow-fast quadratic; principal square root.
std::pair<Complex, Complex> slow_fast_roots(Real gamma0_a, Real dg_kk, Complex zeta);

}  // namespace evansflow
