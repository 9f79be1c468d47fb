// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "evansflow/model.hpp"
#include "evansflow/shock.hpp"

namespace evansflow {

// Boosted-frame data of one family member: f_eps = f_{s(eps)}, its value
// c_eps at the left endstate and the leading profile coefficients.
class FenichelData {
 public:
  FenichelData(const ModelSpec& model, const ShockFamily& family, Real eps);

  Real eps() const { return eps_; }
  Real a() const { return a_; }
  Real gamma0() const { return gamma0_; }
  Real s_eps() const { return s_; }
  const Vec& c_eps() const { return c_; }
  const ModelSpec& boosted() const { return boosted_; }
  const ShockTriple& triple() const { return triple_; }

  // F_eps(u) = eps^{-1} f_eps(eps u) - eps^{-1} c_eps
  Vec F(const Vec& u) const;
  Mat DF(const Vec& u) const;  // = Df_eps(eps u)

 private:
  Real eps_, a_, gamma0_, s_;
  Vec c_;
  ModelSpec boosted_;
  ShockTriple triple_;
};

// Slow manifold u_eps(tau) on tau in [-1, 1], sampled on a Chebyshev-Lobatto
// grid with barycentric evaluation; u_eps(tau)_k = tau exactly.
struct SlowManifold {
  Real eps = 0.0;
  int ki = 0;  // 0-based slow index
  Vec tau;     // ascending Lobatto nodes
  Mat u;       // n x M
  Vec h;       // slow speed factor, h = -gamma0 a + O(eps)
  Vec dh;      // dh/dtau at the nodes

  Vec u_at(Real t) const;
  Real h_at(Real t) const;
  Real dh_at(Real t) const;
};

SlowManifold compute_slow_manifold(const FenichelData& fen, int tau_nodes = 65,
                                   Real fp_tol = 1e-13, int max_sweeps = 200);

// Heteroclinic profile with dense quintic-Hermite evaluation.
struct ProfileGrid {
  Real eps = 0.0, L = 0.0, h = 0.0;
  Vec x;                  // uniform nodes on [-L, L]
  Mat phi, dphi, ddphi;   // n x (#nodes)
  Vec chi, dchi, ddchi;
  Vec v_minus, v_plus;

  Vec phi_at(Real xq) const;
  Real chi_at(Real xq) const;
};

struct ProfileOptions {
  Real tol = 1e-10;
  int nodes_min = 2000;
  int nodes_per_unit_decay = 40;
};

ProfileGrid integrate_profile(const FenichelData& fen, const SlowManifold& slow,
                              Real L, const ProfileOptions& opt = {});

// Max centered-difference residual of phi' = f_eps(phi) - c_eps over the
// interior nodes.
Real profile_residual(const FenichelData& fen, const ProfileGrid& grid);

// Chebyshev-Lobatto helpers (ascending nodes on [-1, 1]).
Vec chebyshev_lobatto_nodes(int m);
Mat chebyshev_differentiation(const Vec& nodes);
Real barycentric_eval(const Vec& nodes, const Vec& values, Real t);

}  // namespace evansflow
