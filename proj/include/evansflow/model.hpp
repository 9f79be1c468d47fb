// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>

#include "evansflow/poly.hpp"
#include "evansflow/types.hpp"

namespace evansflow {

struct Tolerances {
  Real definiteness_margin = 1e-8;
  Real eigenvalue_gap = 1e-6;
  Real diagonalization = 1e-10;
  Real gnl_agreement = 1e-6;  // relative, two-route check
  Real boost_check = 1e-10;
};

// A pair of polynomial fluxes f, g together with the wave-operator matrix B.
// State dimension n <= 8, extreme family index k in {1, n} (1-based).
class ModelSpec {
 public:
  ModelSpec(int n, int k, PolyMap f, PolyMap g, Mat B, Vec u_star, Real delta,
            Tolerances tol = {});

  int n() const { return n_; }
  int k() const { return k_; }           // 1-based
  int k_index() const { return k_ - 1; }  // 0-based
  Real delta() const { return delta_; }
  const Vec& u_star() const { return u_star_; }
  const Mat& B() const { return B_; }
  const PolyMap& f() const { return f_; }
  const PolyMap& g() const { return g_; }
  const Tolerances& tol() const { return tol_; }

  Vec f_eval(const Vec& v) const { return eval(f_, v); }
  Vec g_eval(const Vec& v) const { return eval(g_, v); }
  Mat Df(const Vec& v) const { return jacobian(df_, v); }
  Mat Dg(const Vec& v) const { return jacobian(dg_, v); }
  // Second directional derivative D^2 f(v)[u, u], one component vector.
  Vec D2f(const Vec& v, const Vec& u) const;
  Vec D2g(const Vec& v, const Vec& u) const;
  Real d2_kk(const PolyMap& map, int comp, int var) const;  // d^2 map_comp / d v_var^2 at 0

 private:
  int n_, k_;
  PolyMap f_, g_;
  Mat B_;
  Vec u_star_;
  Real delta_;
  Tolerances tol_;
  std::vector<PolyMap> df_, dg_;  // column maps of the Jacobians
};

struct EigenData {
  Vec mu;  // ascending
  Mat r;   // columns, Dg-orthonormal, sign-fixed
};

struct AssumptionReport {
  bool a1 = false, a2 = false, a3 = false, a4 = false;
  Real margin_B = 0;         // smallest eigenvalue of B
  Real margin_Dg = 0;        // smallest eigenvalue of Dg(u*)
  Real margin_subchar = 0;   // min over both signs of lambda_min(Dg(u*) +- Df(u*))
  Real eigenvalue_gap = 0;   // min gap of generalized eigenvalues at u*
  // Worst-case margins over samples in B_delta(u*); diagnostics only.
  Real ball_metric_margin = 0;
  Real ball_subchar_margin = 0;
  Real ball_speed_margin = 0;  // 1 - max_i |mu_i(v)| over samples
  Real gnl_value = 0;          // <D mu_k(0), r_k(0)>
  Real a_value = 0;            // gnl_value / (2 |r_k(0)|^3)
  Real gamma0 = 0;             // gamma(mu_k(u*))
  bool passed() const { return a1 && a2 && a3 && a4; }
};

struct NormalizationResult {
  ModelSpec model;
  Mat basis_change;  // orthogonal matrix of the final diagonalizing change
  Mat b_sqrt;        // B^{1/2} used in the wave-operator reduction
};

struct Inertia {
  int neg = 0, zero = 0, pos = 0;
};

AssumptionReport validate_assumptions(const ModelSpec& model, int sample_count,
                                      unsigned seed = 0);

EigenData eigen_fields(const ModelSpec& model, const Vec& v);

NormalizationResult normalize_model(const ModelSpec& model);

// <D mu_k(0), r_k(0)> computed by finite differences of mu_k along r_k and by
// the closed form |r_k|^3 (d_k^2 f_k(0) - mu_k(0) d_k^2 g_k(0)); both routes
// must agree. Requires a normalized model.
Real genuine_nonlinearity_coeff(const ModelSpec& model);

Real lorentz_gamma(Real s);
ModelSpec lorentz_boost(const ModelSpec& model, Real s);

Inertia inertia_split(const Mat& F, const Mat& Vminus, const Mat& Vplus,
                      Real margin = 1e-10, Real zero_tol = 1e-10);

}  // namespace evansflow
