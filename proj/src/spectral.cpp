// SPDX-License-Identifier: Apache-2.0
#include "evansflow/spectral.hpp"

#include <algorithm>
#include <cmath>

namespace evansflow {

SpectralContext::SpectralContext(ModelSpec model, Real eps, Real s, Real gamma0,
                                 Real a, Vec v_minus, Vec v_plus)
    : model_(std::move(model)),
      eps_(eps),
      s_(s),
      gamma0_(gamma0),
      a_(a),
      v_minus_(std::move(v_minus)),
      v_plus_(std::move(v_plus)) {
  const int n = model_.n();
  const Vec zero = Vec::Zero(n);
  const Real mu_k0 = eigen_fields(model_, zero).mu[model_.k_index()];
  const Real g0 = lorentz_gamma(mu_k0);
  Df_eps0_ = g0 * (model_.Df(zero) - mu_k0 * model_.Dg(zero));
  Dg_eps0_ = g0 * (model_.Dg(zero) - mu_k0 * model_.Df(zero));
}

SpectralContext::SpectralContext(const ModelSpec& model, const ShockFamily& family,
                                 Real eps)
    : SpectralContext([&] {
        FenichelData fen(model, family, eps);
        return SpectralContext(model, eps, fen.s_eps(), fen.gamma0(), fen.a(),
                               fen.triple().v_minus, fen.triple().v_plus);
      }()) {}

SpectralContext SpectralContext::limit(const ModelSpec& model, Real mu_k0) {
  const int ki = model.k_index();
  const Real gamma0 = lorentz_gamma(mu_k0);
  const Real a =
      0.5 * (model.d2_kk(model.f(), ki, ki) - mu_k0 * model.d2_kk(model.g(), ki, ki));
  const Vec zero = Vec::Zero(model.n());
  return SpectralContext(model, 0.0, mu_k0, gamma0, a, zero, zero);
}

Mat SpectralContext::Df_eps(const Vec& v) const {
  const Real g = lorentz_gamma(s_);
  return g * (model_.Df(v) - s_ * model_.Dg(v));
}

Mat SpectralContext::Dg_eps(const Vec& v) const {
  const Real g = lorentz_gamma(s_);
  return g * (model_.Dg(v) - s_ * model_.Df(v));
}

Vec SpectralContext::lambda_fast() const {
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (Df_eps0_ + Df_eps0_.transpose()));
  return es.eigenvalues();
}

Vec SpectralContext::mu_boosted() const {
  Eigen::GeneralizedSelfAdjointEigenSolver<Mat> es(
      0.5 * (Df_eps0_ + Df_eps0_.transpose()), 0.5 * (Dg_eps0_ + Dg_eps0_.transpose()));
  return es.eigenvalues();
}

CMat SpectralContext::standard_at_v(const Vec& v, Complex kappa) const {
  const int n = model_.n();
  CMat A = CMat::Zero(2 * n, 2 * n);
  A.topLeftCorner(n, n) = Df_eps(v).cast<Complex>();
  A.topRightCorner(n, n) = CMat::Identity(n, n);
  A.bottomLeftCorner(n, n) =
      kappa * kappa * CMat::Identity(n, n) + kappa * Dg_eps(v).cast<Complex>();
  return A;
}

CMat SpectralContext::inner_at_v(const Vec& v, Complex zeta) const {
  const int n = model_.n();
  CMat A = CMat::Zero(2 * n, 2 * n);
  A.topLeftCorner(n, n) = Df_eps(v).cast<Complex>();
  A.topRightCorner(n, n) = eps_ * CMat::Identity(n, n);
  A.bottomLeftCorner(n, n) = (eps_ * eps_ * eps_) * zeta * zeta * CMat::Identity(n, n) +
                             eps_ * zeta * Dg_eps(v).cast<Complex>();
  return A;
}

CMat SpectralContext::standard_endpoint(int side, Complex kappa) const {
  return standard_at_v(side < 0 ? v_minus_ : v_plus_, kappa);
}

CMat SpectralContext::inner_endpoint(int side, Complex zeta) const {
  return inner_at_v(side < 0 ? v_minus_ : v_plus_, zeta);
}

CMat assemble_spectral_matrix(const SpectralContext& ctx, Scaling scaling,
                              Complex param, const Location& loc,
                              const SlowManifold* slow) {
  Vec v;
  if (loc.is_tau) {
    if (ctx.eps() == 0.0) {
      if (scaling == Scaling::standard)
        throw ScalingMismatch("standard scaling undefined at a tau-location for eps = 0");
      v = Vec::Zero(ctx.n());
    } else {
      if (slow == nullptr) throw Error("tau-location requires a slow manifold");
      v = ctx.eps() * slow->u_at(loc.tau);
    }
  } else {
    v = loc.v;
  }
  return scaling == Scaling::standard ? ctx.standard_at_v(v, param)
                                      : ctx.inner_at_v(v, param);
}

namespace {

void count_by_real_part(const CVec& ev, Real tol, int& unstable, int& stable,
                        int& center, Real& gap) {
  unstable = stable = center = 0;
  for (int i = 0; i < ev.size(); ++i) {
    const Real re = ev[i].real();
    if (re > tol) {
      unstable++;
      gap = std::min(gap, re);
    } else if (re < -tol) {
      stable++;
      gap = std::min(gap, -re);
    } else {
      center++;
    }
  }
}

}  // namespace

SplittingReport endpoint_splitting(const SpectralContext& ctx, Complex kappa,
                                   Real center_tol) {
  SplittingReport rep;
  rep.gap = std::numeric_limits<Real>::infinity();
  const CMat Am = ctx.standard_endpoint(-1, kappa);
  const CMat Ap = ctx.standard_endpoint(+1, kappa);
  Eigen::ComplexEigenSolver<CMat> esm(Am, false), esp(Ap, false);
  count_by_real_part(esm.eigenvalues(), center_tol, rep.unstable_minus,
                     rep.stable_minus, rep.center_minus, rep.gap);
  count_by_real_part(esp.eigenvalues(), center_tol, rep.unstable_plus,
                     rep.stable_plus, rep.center_plus, rep.gap);
  const bool has_center = rep.center_minus > 0 || rep.center_plus > 0;
  if (has_center && kappa != Complex(0.0, 0.0))
    throw CenterEigenvalue("eigenvalue grazes the imaginary axis at kappa != 0");
  rep.consistent =
      !has_center && rep.unstable_minus == ctx.n() && rep.stable_plus == ctx.n();
  return rep;
}

SKReport shizuta_kawashima_check(const Mat& F, const Mat& G, const SKOptions& opt) {
  const int n = static_cast<int>(F.rows());
  if ((F - F.transpose()).norm() > 1e-12 * std::max(1.0, F.norm()) ||
      (G - G.transpose()).norm() > 1e-12 * std::max(1.0, G.norm()))
    throw SKViolation("B1 fails: F, G must be symmetric");
  Eigen::SelfAdjointEigenSolver<Mat> esg(G);
  if (esg.eigenvalues().minCoeff() <= 0)
    throw SKViolation("B1 fails: G not positive definite");
  const Real m_plus = Eigen::SelfAdjointEigenSolver<Mat>(G + F).eigenvalues().minCoeff();
  const Real m_minus = Eigen::SelfAdjointEigenSolver<Mat>(G - F).eigenvalues().minCoeff();
  if (m_plus <= 0 || m_minus <= 0)
    throw SKViolation("B2 fails: G +- F not positive definite");

  SKReport rep;
  Mat K = Mat::Zero(2 * n, 2 * n), Q = Mat::Zero(2 * n, 2 * n);
  K.topRightCorner(n, n) = Mat::Identity(n, n);
  K.bottomLeftCorner(n, n) = Mat::Identity(n, n);
  Q.topLeftCorner(n, n) = -G;
  Q.topRightCorner(n, n) = -F;
  rep.K0 = Mat::Zero(2 * n, 2 * n);
  rep.K0.topLeftCorner(n, n) = G;
  rep.K0.bottomRightCorner(n, n) = G;
  rep.K0.topRightCorner(n, n) = F;
  rep.K0.bottomLeftCorner(n, n) = F;

  const Mat K0K = rep.K0 * K, K0Q = rep.K0 * Q;
  rep.k0_margin = Eigen::SelfAdjointEigenSolver<Mat>(rep.K0).eigenvalues().minCoeff();
  const bool sym_ok = (K0K - K0K.transpose()).norm() <= 1e-10 * std::max(1.0, K0K.norm()) &&
                      (K0Q - K0Q.transpose()).norm() <= 1e-10 * std::max(1.0, K0Q.norm());
  rep.k0q_max =
      Eigen::SelfAdjointEigenSolver<Mat>(0.5 * (K0Q + K0Q.transpose())).eigenvalues().maxCoeff();
  rep.sk1 = rep.k0_margin > 0 && sym_ok && rep.k0q_max <= 1e-10;
  if (!rep.sk1) throw SKViolation("SK1 fails");

  // SK2: K-eigenvectors are (e, +-e); Q(e, +-e) = (-(G +- F)e, 0) != 0.
  const Real sk2_margin = std::min(m_plus, m_minus);
  rep.sk2 = sk2_margin > 0;
  if (!rep.sk2) throw SKViolation("SK2 fails");

  // theta on a log-spaced grid, nu from the proof recipe.
  rep.xi_grid = Vec(opt.xi_points);
  rep.max_re_lambda = Vec(opt.xi_points);
  const Real lmin = std::log(opt.xi_min), lmax = std::log(opt.xi_max);
  Real theta = std::numeric_limits<Real>::infinity();
  Real c_xi0 = 0.0;
  for (int i = 0; i < opt.xi_points; ++i) {
    const Real xi =
        std::exp(lmin + (lmax - lmin) * static_cast<Real>(i) / (opt.xi_points - 1));
    rep.xi_grid[i] = xi;
    CMat M = Q.cast<Complex>() + Complex(0.0, xi) * K.cast<Complex>();
    Eigen::ComplexEigenSolver<CMat> es(M, false);
    Real max_re = -std::numeric_limits<Real>::infinity();
    Real max_im = 0.0;
    for (int j = 0; j < es.eigenvalues().size(); ++j) {
      max_re = std::max(max_re, es.eigenvalues()[j].real());
      max_im = std::max(max_im, std::abs(es.eigenvalues()[j].imag()));
    }
    rep.max_re_lambda[i] = max_re;
    theta = std::min(theta, -max_re * (1.0 + xi * xi) / (xi * xi));
    if (xi <= opt.xi0) c_xi0 = std::max(c_xi0, max_im / xi);
  }
  rep.theta = theta;
  rep.xi0 = opt.xi0;
  rep.c_xi0 = c_xi0;
  if (!(theta > 0)) throw SKViolation("dispersion decay coefficient not positive");
  rep.nu = theta * std::min(1.0 / (c_xi0 * c_xi0), opt.xi0 * opt.xi0) /
           (1.0 + opt.xi0 * opt.xi0);
  return rep;
}

DispersionReport dispersion_margin(const SpectralContext& ctx, const SKOptions& opt,
                                   Real boundary_radius, int boundary_samples) {
  DispersionReport rep;
  rep.minus = shizuta_kawashima_check(ctx.Df_eps(ctx.v_minus()), ctx.Dg_eps(ctx.v_minus()), opt);
  rep.plus = shizuta_kawashima_check(ctx.Df_eps(ctx.v_plus()), ctx.Dg_eps(ctx.v_plus()), opt);
  rep.nu = std::min(rep.minus.nu, rep.plus.nu);
  rep.boundary_samples = boundary_samples;
  rep.boundary_consistent = true;
  for (int i = 0; i < boundary_samples; ++i) {
    // points on the dispersion-region boundary, spread in log |Im kappa|
    const Real y = std::pow(10.0, -3.0 + 4.0 * static_cast<Real>(i) /
                                              std::max(1, boundary_samples - 1));
    if (y > boundary_radius) break;
    const Real x = -rep.nu * y * y / (1.0 + y * y) * (1.0 - 1e-6);
    for (Real sign : {1.0, -1.0}) {
      SplittingReport sr = endpoint_splitting(ctx, Complex(x, sign * y));
      rep.boundary_consistent = rep.boundary_consistent && sr.consistent;
    }
  }
  return rep;
}

std::pair<Complex, Complex> slow_fast_roots(Real gamma0_a, Real dg_kk, Complex zeta) {
  const Complex rad = std::sqrt(Complex(gamma0_a * gamma0_a, 0.0) + dg_kk * zeta);
  return {gamma0_a + rad, gamma0_a - rad};
}

InnerExpansionReport inner_eigenvalue_expansion(const SpectralContext& ctx, Complex zeta) {
  const int n = ctx.n();
  const int ki = ctx.k_index();
  const Real eps = ctx.eps();
  const Real g0a = ctx.gamma0() * ctx.a();
  const Real dg_kk = ctx.Dg0()(ki, ki);

  InnerExpansionReport rep;
  std::tie(rep.nu1, rep.nu2) = slow_fast_roots(g0a, dg_kk, zeta);
  const Real idtol = 1e-12 * std::max(1.0, std::abs(rep.nu1) + std::abs(rep.nu2));
  if (std::abs(rep.nu1 + rep.nu2 - 2.0 * g0a) > idtol ||
      std::abs(rep.nu1 * rep.nu2 + dg_kk * zeta) > idtol)
    throw Error("slow-fast root identities fail");
  if (zeta != Complex(0, 0) && zeta.real() >= 0.0) {
    if (std::abs(-zeta * dg_kk / rep.nu2 - rep.nu1) > 1e3 * idtol)
      throw Error("nu identity -zeta Dg_kk / nu2 != nu1");
    if (!(rep.nu1.real() > 0.0) || !(rep.nu2.real() <= g0a))
      throw Error("slow-fast roots on the wrong side");
  }

  const Vec lam = ctx.lambda_fast();   // ascending; slot of the k-mode is near 0
  const Vec mu = ctx.mu_boosted();     // ascending, mu[ki] ~ 0

  auto predict = [&](int side) {
    std::vector<EigenGroupPrediction> preds;
    for (int j = 0; j < n; ++j) {
      if (j == ki) continue;
      EigenGroupPrediction p;
      p.label = (j < ki ? "fast-S[" : "fast-U[") + std::to_string(j) + "]";
      p.predicted = Complex(lam[j], 0.0);
      p.order = 0;
      preds.push_back(p);
    }
    {
      EigenGroupPrediction s, u;
      if (side > 0) {
        s.predicted = eps * rep.nu2;
        u.predicted = -eps * zeta * dg_kk / rep.nu2;
      } else {
        s.predicted = eps * zeta * dg_kk / rep.nu2;
        u.predicted = -eps * rep.nu2;
      }
      s.label = "sf-S";
      u.label = "sf-U";
      s.order = u.order = 1;
      preds.push_back(s);
      preds.push_back(u);
    }
    for (int j = 0; j < n; ++j) {
      if (j == ki) continue;
      EigenGroupPrediction p;
      p.label = (j > ki ? "ss-S[" : "ss-U[") + std::to_string(j) + "]";
      p.predicted = -eps * eps * zeta / mu[j];
      p.order = 2;
      preds.push_back(p);
    }
    return preds;
  };

  auto match = [&](std::vector<EigenGroupPrediction> preds, int side) {
    const CMat A = ctx.inner_endpoint(side, zeta);
    Eigen::ComplexEigenSolver<CMat> es(A, false);
    CVec ev = es.eigenvalues();
    std::vector<bool> used(static_cast<size_t>(ev.size()), false);
    std::vector<bool> done(preds.size(), false);
    for (size_t pick = 0; pick < preds.size(); ++pick) {
      Real best = std::numeric_limits<Real>::infinity();
      size_t bi = 0;
      int bj = -1;
      for (size_t i = 0; i < preds.size(); ++i) {
        if (done[i]) continue;
        for (int j = 0; j < ev.size(); ++j) {
          if (used[static_cast<size_t>(j)]) continue;
          const Real d = std::abs(preds[i].predicted - ev[j]);
          if (d < best) {
            best = d;
            bi = i;
            bj = j;
          }
        }
      }
      // ambiguity: another open prediction of a different value is as close
      for (size_t i = 0; i < preds.size(); ++i) {
        if (done[i] || i == bi) continue;
        if (std::abs(preds[i].predicted - ev[bj]) < 0.5 * best &&
            std::abs(preds[i].predicted - preds[bi].predicted) > 10 * best)
          throw GroupAssignmentAmbiguous("two eigenvalue groups claim one eigenvalue");
      }
      preds[bi].matched = ev[bj];
      preds[bi].residual = best;
      used[static_cast<size_t>(bj)] = true;
      done[bi] = true;
    }
    return preds;
  };

  rep.minus = match(predict(-1), -1);
  rep.plus = match(predict(+1), +1);
  return rep;
}

}  // namespace evansflow
