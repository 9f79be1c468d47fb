// SPDX-License-Identifier: Apache-2.0
#include "evansflow/profile.hpp"

#include <algorithm>
#include <cmath>

#include "evansflow/ode.hpp"

namespace evansflow {

Vec chebyshev_lobatto_nodes(int m) {
  Vec t(m);
  for (int j = 0; j < m; ++j)
    t[j] = -std::cos(M_PI * static_cast<Real>(j) / static_cast<Real>(m - 1));
  t[0] = -1.0;
  t[m - 1] = 1.0;
  if (m % 2 == 1) t[(m - 1) / 2] = 0.0;
  return t;
}

Mat chebyshev_differentiation(const Vec& t) {
  const int m = static_cast<int>(t.size());
  Vec c(m);
  for (int i = 0; i < m; ++i) c[i] = ((i == 0 || i == m - 1) ? 2.0 : 1.0) * ((i % 2) ? -1.0 : 1.0);
  Mat D(m, m);
  for (int i = 0; i < m; ++i) {
    Real rowsum = 0.0;
    for (int j = 0; j < m; ++j) {
      if (i == j) continue;
      D(i, j) = (c[i] / c[j]) / (t[i] - t[j]);
      rowsum += D(i, j);
    }
    D(i, i) = -rowsum;
  }
  return D;
}

Real barycentric_eval(const Vec& t, const Vec& v, Real tq) {
  const int m = static_cast<int>(t.size());
  Real num = 0.0, den = 0.0;
  for (int j = 0; j < m; ++j) {
    const Real d = tq - t[j];
    if (std::abs(d) < 1e-300) return v[j];
    Real w = ((j == 0 || j == m - 1) ? 0.5 : 1.0) * ((j % 2) ? -1.0 : 1.0);
    w /= d;
    num += w * v[j];
    den += w;
  }
  return num / den;
}

FenichelData::FenichelData(const ModelSpec& model, const ShockFamily& family, Real eps)
    : eps_(eps),
      boosted_(model),  // placeholder, replaced below
      triple_(family.at_eps(eps)) {
  s_ = triple_.s;
  boosted_ = lorentz_boost(model, s_);
  c_ = boosted_.f_eval(triple_.v_minus);
  const int ki = model.k_index();
  const Real mu_k0 = family.mu_k0;
  gamma0_ = lorentz_gamma(mu_k0);
  // a = (1/2)(d_k^2 f_k(0) - mu_k(0) d_k^2 g_k(0)) of the unboosted model.
  a_ = 0.5 * (model.d2_kk(model.f(), ki, ki) - mu_k0 * model.d2_kk(model.g(), ki, ki));
}

Vec FenichelData::F(const Vec& u) const {
  return (boosted_.f_eval(eps_ * u) - c_) / eps_;
}

Mat FenichelData::DF(const Vec& u) const { return boosted_.Df(eps_ * u); }

Vec SlowManifold::u_at(Real t) const {
  const int n = static_cast<int>(u.rows());
  Vec out(n);
  for (int i = 0; i < n; ++i) {
    if (i == ki) {
      out[i] = t;
      continue;
    }
    out[i] = barycentric_eval(tau, u.row(i).transpose(), t);
  }
  return out;
}

Real SlowManifold::h_at(Real t) const { return barycentric_eval(tau, h, t); }
Real SlowManifold::dh_at(Real t) const { return barycentric_eval(tau, dh, t); }

SlowManifold compute_slow_manifold(const FenichelData& fen, int tau_nodes,
                                   Real fp_tol, int max_sweeps) {
  if (tau_nodes % 2 == 0) tau_nodes += 1;  // keep tau = 0 on the grid
  const ModelSpec& bm = fen.boosted();
  const int n = bm.n();
  const int ki = bm.k_index();
  const Real eps = fen.eps();

  SlowManifold sm;
  sm.eps = eps;
  sm.ki = ki;
  sm.tau = chebyshev_lobatto_nodes(tau_nodes);
  const Mat D = chebyshev_differentiation(sm.tau);
  const int m = tau_nodes;

  sm.u = Mat::Zero(n, m);
  sm.u.row(ki) = sm.tau.transpose();
  // endpoint values come from the shock endstates
  sm.u.col(0) = fen.triple().v_minus / eps;
  sm.u.col(m - 1) = fen.triple().v_plus / eps;
  sm.u(ki, 0) = -1.0;
  sm.u(ki, m - 1) = 1.0;

  Vec Fk(m);
  sm.h = Vec::Zero(m);
  auto update_h = [&]() {
    for (int j = 0; j < m; ++j) Fk[j] = fen.F(sm.u.col(j))[ki];
    const Vec dFk = D * Fk;
    for (int j = 0; j < m; ++j) {
      if (j == 0)
        sm.h[j] = dFk[0] / (2.0 * eps);
      else if (j == m - 1)
        sm.h[j] = -dFk[m - 1] / (2.0 * eps);
      else
        sm.h[j] = Fk[j] / (eps * (1.0 - sm.tau[j] * sm.tau[j]));
    }
  };

  update_h();
  if (n > 1) {
    std::vector<int> off;
    for (int i = 0; i < n; ++i)
      if (i != ki) off.push_back(i);
    // spectral differentiation amplifies roundoff; stop at that floor
    const Real d_norm = D.cwiseAbs().rowwise().sum().maxCoeff();
    const Real floor = 100.0 * std::numeric_limits<Real>::epsilon() * (1.0 + d_norm);
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
      // derivative of the off-k graph along tau, lagged one sweep
      Mat du(n, m);
      for (int i = 0; i < n; ++i) du.row(i) = (D * sm.u.row(i).transpose()).transpose();
      Real change = 0.0;
      for (int j = 1; j + 1 < m; ++j) {
        const Real speed = eps * (1.0 - sm.tau[j] * sm.tau[j]) * sm.h[j];
        Vec uj = sm.u.col(j);
        for (int it = 0; it < 20; ++it) {
          const Vec Fv = fen.F(uj);
          Vec r(static_cast<int>(off.size()));
          for (size_t c = 0; c < off.size(); ++c)
            r[static_cast<int>(c)] = Fv[off[c]] - du(off[c], j) * speed;
          if (r.norm() < fp_tol) break;
          const Mat J = fen.DF(uj);
          Mat Joff(static_cast<int>(off.size()), static_cast<int>(off.size()));
          for (size_t a = 0; a < off.size(); ++a)
            for (size_t b = 0; b < off.size(); ++b)
              Joff(static_cast<int>(a), static_cast<int>(b)) = J(off[a], off[b]);
          const Vec d = Joff.fullPivLu().solve(r);
          if (!d.allFinite()) throw SlowManifoldDivergence("singular off-k Jacobian");
          for (size_t c = 0; c < off.size(); ++c) uj[off[c]] -= d[static_cast<int>(c)];
        }
        change = std::max(change, (uj - sm.u.col(j)).cwiseAbs().maxCoeff());
        sm.u.col(j) = uj;
      }
      update_h();
      if (change < std::max(fp_tol * std::max(1.0, eps), floor)) break;
      if (sweep + 1 == max_sweeps)
        throw SlowManifoldDivergence("graph iteration did not converge");
    }
  }
  sm.dh = D * sm.h;
  return sm;
}

namespace {

// Quintic Hermite basis on s in [0, 1]; derivatives scaled by the interval.
void quintic_weights(Real s, Real w[6]) {
  const Real s2 = s * s, s3 = s2 * s, s4 = s3 * s, s5 = s4 * s;
  w[0] = 1 - 10 * s3 + 15 * s4 - 6 * s5;
  w[1] = s - 6 * s3 + 8 * s4 - 3 * s5;
  w[2] = 0.5 * (s2 - 3 * s3 + 3 * s4 - s5);
  w[3] = 10 * s3 - 15 * s4 + 6 * s5;
  w[4] = -4 * s3 + 7 * s4 - 3 * s5;
  w[5] = 0.5 * (s3 - 2 * s4 + s5);
}

}  // namespace

Vec ProfileGrid::phi_at(Real xq) const {
  const int m = static_cast<int>(x.size());
  if (xq <= x[0]) return phi.col(0);
  if (xq >= x[m - 1]) return phi.col(m - 1);
  const int i = std::min(static_cast<int>((xq - x[0]) / h), m - 2);
  const Real s = (xq - x[i]) / h;
  Real w[6];
  quintic_weights(s, w);
  return w[0] * phi.col(i) + w[1] * h * dphi.col(i) + w[2] * h * h * ddphi.col(i) +
         w[3] * phi.col(i + 1) + w[4] * h * dphi.col(i + 1) +
         w[5] * h * h * ddphi.col(i + 1);
}

Real ProfileGrid::chi_at(Real xq) const {
  const int m = static_cast<int>(x.size());
  if (xq <= x[0]) return chi[0];
  if (xq >= x[m - 1]) return chi[m - 1];
  const int i = std::min(static_cast<int>((xq - x[0]) / h), m - 2);
  const Real s = (xq - x[i]) / h;
  Real w[6];
  quintic_weights(s, w);
  return w[0] * chi[i] + w[1] * h * dchi[i] + w[2] * h * h * ddchi[i] +
         w[3] * chi[i + 1] + w[4] * h * dchi[i + 1] + w[5] * h * h * ddchi[i + 1];
}

ProfileGrid integrate_profile(const FenichelData& fen, const SlowManifold& slow,
                              Real L, const ProfileOptions& opt) {
  const ModelSpec& bm = fen.boosted();
  const int n = bm.n();
  const Real eps = fen.eps();
  const Real decay = eps * std::abs(fen.gamma0() * fen.a());
  if (decay > 0 && L < 10.0 / decay * (1.0 - 1e-12))
    throw Error("truncation length below the decay-length heuristic");

  ProfileGrid grid;
  grid.eps = eps;
  grid.L = L;
  grid.v_minus = fen.triple().v_minus;
  grid.v_plus = fen.triple().v_plus;
  const int half = std::max(opt.nodes_min,
                            static_cast<int>(opt.nodes_per_unit_decay * L * decay)) / 2;
  const int m = 2 * half + 1;
  grid.h = L / half;
  grid.x = Vec::LinSpaced(m, -L, L);
  grid.phi = Mat::Zero(n, m);
  grid.dphi = Mat::Zero(n, m);
  grid.ddphi = Mat::Zero(n, m);
  grid.chi = Vec::Zero(m);
  grid.dchi = Vec::Zero(m);
  grid.ddchi = Vec::Zero(m);

  // The heteroclinic is realized through its slow parametrization
  // phi(x) = eps u(chi(x)). Marching the full phi-equation is unstable for
  // n >= 2 (the slow manifold has fast unstable normal directions whose
  // growth over the truncated line overwhelms any tolerance), while the
  // scalar chi-equation contracts towards +-1 in both directions. The
  // profile-equation residual is checked a posteriori below and by
  // profile_residual().
  auto chi_rhs = [&](const Vec& y, Vec& dydx, Real) {
    const Real chi = std::clamp(y[0], -1.0, 1.0);
    dydx.resize(1);
    dydx[0] = eps * (1.0 - chi * chi) * slow.h_at(chi);
  };
  auto store = [&](int idx, Real chi_val) {
    const Real chi = std::clamp(chi_val, -1.0, 1.0);
    const Vec phi = eps * slow.u_at(chi);
    const Vec dphi = bm.f_eval(phi) - fen.c_eps();
    grid.phi.col(idx) = phi;
    grid.dphi.col(idx) = dphi;
    grid.ddphi.col(idx) = bm.Df(phi) * dphi;
    grid.chi[idx] = chi;
    const Real hc = slow.h_at(chi);
    grid.dchi[idx] = eps * (1.0 - chi * chi) * hc;
    grid.ddchi[idx] =
        eps * (-2.0 * chi * hc + (1.0 - chi * chi) * slow.dh_at(chi)) * grid.dchi[idx];
  };

  ode::Options oopt;
  oopt.abs_tol = 0.1 * opt.tol;
  oopt.rel_tol = 0.1 * opt.tol;

  Vec y = Vec::Zero(1);
  store(half, 0.0);
  for (int i = half + 1; i < m; ++i) {
    oopt.h_init = grid.h;
    ode::integrate(chi_rhs, y, grid.x[i - 1], grid.x[i], oopt);
    store(i, y[0]);
  }
  y.setZero();
  for (int i = half - 1; i >= 0; --i) {
    ode::integrate(chi_rhs, y, grid.x[i + 1], grid.x[i], oopt);
    store(i, y[0]);
  }

  if ((grid.phi.col(m - 1) - grid.v_plus).norm() > 10 * opt.tol ||
      (grid.phi.col(0) - grid.v_minus).norm() > 10 * opt.tol)
    throw EndpointMiss("profile endpoints miss the endstates");

  // a posteriori: the parametrized curve solves the profile equation
  Real worst = 0.0;
  for (int i = 1; i + 1 < m; ++i) {
    const Vec lhs = (grid.phi.col(i + 1) - grid.phi.col(i - 1)) / (2.0 * grid.h);
    worst = std::max(worst, (lhs - grid.dphi.col(i)).norm());
  }
  const Real scale = std::max(1.0, grid.dphi.cwiseAbs().maxCoeff());
  if (worst > 10.0 * grid.h * grid.h * scale + 1e4 * opt.tol)
    throw Error("slow parametrization fails the profile-equation residual check");
  return grid;
}

Real profile_residual(const FenichelData& fen, const ProfileGrid& grid) {
  const int m = static_cast<int>(grid.x.size());
  Real worst = 0.0;
  for (int i = 1; i + 1 < m; ++i) {
    const Vec num = (grid.phi.col(i + 1) - grid.phi.col(i - 1)) / (2.0 * grid.h);
    const Vec rhs = fen.boosted().f_eval(grid.phi.col(i)) - fen.c_eps();
    worst = std::max(worst, (num - rhs).norm());
  }
  return worst;
}

}  // namespace evansflow
