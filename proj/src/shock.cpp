// SPDX-License-Identifier: Apache-2.0
#include "evansflow/shock.hpp"

#include <algorithm>
#include <cmath>

namespace evansflow {

const ShockTriple& ShockFamily::at_eps(Real eps) const {
  for (size_t i = 0; i < eps_values.size(); ++i)
    if (std::abs(eps_values[i] - eps) <= 1e-12 * std::max(1.0, eps)) return triples[i];
  throw Error("eps not in family");
}

bool ShockFamily::contains(Real eps) const {
  for (Real e : eps_values)
    if (std::abs(e - eps) <= 1e-12 * std::max(1.0, eps)) return true;
  return false;
}

Real rh_residual(const ModelSpec& model, const ShockTriple& t) {
  const Vec r = model.f_eval(t.v_plus) - model.f_eval(t.v_minus) -
                t.s * (model.g_eval(t.v_plus) - model.g_eval(t.v_minus));
  return r.norm();
}

namespace {

// Unknowns: w in R^{n-1} (off-k components of v+, with v- = -v+ off-k) and s.
// v+ = eps e_k + E w, v- = -eps e_k - E w, E the off-k embedding.
struct SymmetricSystem {
  const ModelSpec& model;
  Real eps;
  int n, ki;

  Vec embed(const Vec& w, Real sign) const {
    Vec v = Vec::Zero(n);
    v[ki] = sign * eps;
    int c = 0;
    for (int i = 0; i < n; ++i)
      if (i != ki) v[i] = sign * w[c++];
    return v;
  }

  Vec residual(const Vec& w, Real s) const {
    ShockTriple t{embed(w, -1.0), embed(w, 1.0), s};
    return model.f_eval(t.v_plus) - model.f_eval(t.v_minus) -
           s * (model.g_eval(t.v_plus) - model.g_eval(t.v_minus));
  }

  Mat jacobian_unknowns(const Vec& w, Real s) const {
    const Vec vp = embed(w, 1.0), vm = embed(w, -1.0);
    const Mat Jp = model.Df(vp) - s * model.Dg(vp);
    const Mat Jm = model.Df(vm) - s * model.Dg(vm);
    Mat J(n, n);
    int c = 0;
    for (int i = 0; i < n; ++i) {
      if (i == ki) continue;
      J.col(c++) = Jp.col(i) + Jm.col(i);  // v+ and v- move oppositely
    }
    J.col(n - 1) = -(model.g_eval(vp) - model.g_eval(vm));
    return J;
  }
};

}  // namespace

ShockTriple solve_rankine_hugoniot(const ModelSpec& model, Real eps,
                                   std::optional<ShockTriple> guess,
                                   const ShockSolveOptions& opt) {
  const int n = model.n();
  const int ki = model.k_index();
  if (eps <= 0) throw Error("eps must be positive");
  if (eps > model.delta() / 3.0 + 1e-15)
    throw Error("eps exceeds delta/3");

  SymmetricSystem sys{model, eps, n, ki};
  Vec w = Vec::Zero(n - 1);
  Real s = eigen_fields(model, Vec::Zero(n)).mu[ki];
  if (guess) {
    int c = 0;
    for (int i = 0; i < n; ++i)
      if (i != ki) w[c++] = guess->v_plus[i];
    s = guess->s;
  }

  for (int it = 0; it < opt.newton_max_iter; ++it) {
    const Vec r = sys.residual(w, s);
    if (r.norm() < opt.rh_tol) break;
    const Mat J = sys.jacobian_unknowns(w, s);
    const Vec d = J.fullPivLu().solve(r);
    if (!d.allFinite()) throw NewtonDivergence("singular Jacobian in RH solve");
    for (int c = 0; c < n - 1; ++c) w[c] -= d[c];
    s -= d[n - 1];
    if (w.norm() > 10 * eps || std::abs(s) >= 1.0)
      throw NewtonDivergence("RH iterates left the small-shock regime");
  }
  if (sys.residual(w, s).norm() >= opt.rh_tol)
    throw NewtonDivergence("RH Newton did not reach tolerance");

  ShockTriple t{sys.embed(w, -1.0), sys.embed(w, 1.0), s};

  // Uniqueness in B_{3 eps}(0): multi-start Newton on f(v) - s g(v) = const;
  // every converged point must coincide with v- or v+.
  const Vec c_minus = model.f_eval(t.v_minus) - s * model.g_eval(t.v_minus);
  const Real rad = 2.0 * eps;
  for (int seed = 0; seed < opt.uniqueness_seeds; ++seed) {
    Vec v = Vec::Zero(n);
    const Real ang = 2.0 * M_PI * seed / opt.uniqueness_seeds;
    v[ki] = rad * std::cos(ang);
    v[(ki + 1) % n] += n > 1 ? rad * std::sin(ang) : 0.0;
    bool ok = false;
    for (int it = 0; it < opt.newton_max_iter; ++it) {
      const Vec r = model.f_eval(v) - s * model.g_eval(v) - c_minus;
      if (r.norm() < opt.rh_tol) {
        ok = true;
        break;
      }
      const Mat J = model.Df(v) - s * model.Dg(v);
      const Vec d = J.fullPivLu().solve(r);
      if (!d.allFinite()) break;
      v -= d;
      if (v.norm() > 3.0 * eps * 3.0) break;  // left the search ball
    }
    if (!ok || v.norm() > 3.0 * eps) continue;
    if ((v - t.v_minus).norm() > 1e-6 * eps && (v - t.v_plus).norm() > 1e-6 * eps)
      throw NonUniqueHugoniotPoint("third Hugoniot point inside B_{3eps}(0)");
  }
  return t;
}

std::optional<int> classify_lax(const ModelSpec& model, const ShockTriple& t,
                                const ShockSolveOptions& opt) {
  if (rh_residual(model, t) > 1e-8)
    throw Error("triple does not satisfy the Rankine-Hugoniot condition");
  const Vec mu_m = eigen_fields(model, t.v_minus).mu;
  const Vec mu_p = eigen_fields(model, t.v_plus).mu;
  const int n = model.n();
  for (int p = 0; p < n; ++p) {
    const Real in_left = mu_m[p] - t.s;   // want > 0
    const Real in_right = t.s - mu_p[p];  // want > 0
    if (in_left <= -opt.lax_margin || in_right <= -opt.lax_margin) continue;
    if (std::min(in_left, in_right) < opt.lax_margin)
      throw MarginalShock("characteristic speed within margin of the shock speed");
    bool others_ok = true;
    for (int j = 0; j < n; ++j) {
      if (j == p) continue;
      const Real prod = (mu_m[j] - t.s) * (mu_p[j] - t.s);
      if (std::abs(prod) < opt.lax_margin * opt.lax_margin)
        throw MarginalShock("non-principal family grazes the shock speed");
      if (prod < 0) others_ok = false;
    }
    if (others_ok) return p + 1;  // 1-based
  }
  return std::nullopt;
}

ShockFamily build_shock_family(const ModelSpec& model, const std::vector<Real>& eps_list,
                               const ShockSolveOptions& opt) {
  ShockFamily fam;
  fam.mu_k0 = eigen_fields(model, Vec::Zero(model.n())).mu[model.k_index()];
  if (eps_list.empty()) return fam;
  for (size_t i = 0; i + 1 < eps_list.size(); ++i)
    if (eps_list[i + 1] <= eps_list[i])
      throw Error("eps list must be strictly increasing");

  std::optional<ShockTriple> warm;
  for (Real eps : eps_list) {
    ShockTriple t = solve_rankine_hugoniot(model, eps, warm, opt);
    if (rh_residual(model, t) > opt.rh_tol * 10)
      throw FamilyInvariantViolation("RH residual above tolerance");
    auto p = classify_lax(model, t, opt);
    if (!p || *p != model.k())
      throw FamilyInvariantViolation("family member is not a Lax k-shock");
    fam.eps_values.push_back(eps);
    fam.triples.push_back(t);
    warm = t;
  }

  // s(eps) -> mu_k(0) with s'(0) -> 0: finite-difference slope from the
  // smallest member, O(eps) tolerance.
  const Real eps0 = fam.eps_values.front();
  const Real slope = (fam.triples.front().s - fam.mu_k0) / eps0;
  if (std::abs(slope) > opt.family_slope_coeff * eps0)
    throw FamilyInvariantViolation("finite-difference s'(0) not O(eps)");

  // v+- = +-eps(e_k + O(eps)); fit the constant from the two smallest members.
  const int ki = model.k_index();
  auto offset = [&](size_t i) {
    Vec ek = Vec::Zero(model.n());
    ek[ki] = fam.eps_values[i];
    return std::max((fam.triples[i].v_plus - ek).norm(),
                    (fam.triples[i].v_minus + ek).norm());
  };
  Real cfit = 1e-12;
  for (size_t i = 0; i < std::min<size_t>(2, fam.eps_values.size()); ++i)
    cfit = std::max(cfit, offset(i) / (fam.eps_values[i] * fam.eps_values[i]));
  for (size_t i = 0; i < fam.eps_values.size(); ++i) {
    const Real bound = std::max(10.0 * cfit, 1e-9) * fam.eps_values[i] * fam.eps_values[i];
    if (offset(i) > bound + 1e-12)
      throw FamilyInvariantViolation("endstates deviate from +-eps e_k beyond O(eps^2)");
  }
  return fam;
}

}  // namespace evansflow
