// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "evansflow/spectral.hpp"
#include "test_util.hpp"

using namespace evansflow;

namespace {

SpectralContext hb_context(Real eps) {
  static ModelSpec m = testutil::model_hb();
  ShockFamily fam = build_shock_family(m, {eps});
  return SpectralContext(m, fam, eps);
}

}  // namespace

TEST_CASE("standard-scaling assembly matches the block formula") {
  SpectralContext ctx = hb_context(0.1);
  Location loc;
  loc.v = Vec::Constant(1, 0.1);
  CMat A = assemble_spectral_matrix(ctx, Scaling::standard, Complex(1, 0), loc);
  CHECK(std::abs(A(0, 0) - Complex(-0.2, 0)) < 1e-13);
  CHECK(std::abs(A(0, 1) - Complex(1, 0)) < 1e-13);
  CHECK(std::abs(A(1, 0) - Complex(2, 0)) < 1e-13);
  CHECK(std::abs(A(1, 1)) < 1e-13);
}

TEST_CASE("inner scaling at eps = 0 keeps only Df0") {
  ModelSpec hb = testutil::model_hb();
  SpectralContext lim = SpectralContext::limit(hb, 0.0);
  Location loc;
  loc.is_tau = true;
  loc.tau = 0.3;
  CMat A = assemble_spectral_matrix(lim, Scaling::inner, Complex(0.7, 0.1), loc);
  CHECK(A.norm() < 1e-13);  // Df(0) = 0 for this model
  CHECK_THROWS_AS(
      assemble_spectral_matrix(lim, Scaling::standard, Complex(1, 0), loc),
      ScalingMismatch);

  ModelSpec md = testutil::model_d();
  SpectralContext lim2 = SpectralContext::limit(md, 0.0);
  CMat A2 = assemble_spectral_matrix(lim2, Scaling::inner, Complex(1, 0), loc);
  CHECK(std::abs(A2(0, 0)) < 1e-13);
  CHECK(std::abs(A2(1, 1) - Complex(0.5, 0)) < 1e-13);
  CHECK(A2.bottomRows(2).norm() < 1e-13);
  CHECK(A2.topRightCorner(2, 2).norm() < 1e-13);
}

TEST_CASE("inner and standard scalings are similar for eps > 0") {
  SpectralContext ctx = hb_context(0.1);
  ShockFamily fam = build_shock_family(testutil::model_hb(), {0.1});
  FenichelData fen(testutil::model_hb(), fam, 0.1);
  SlowManifold sm = compute_slow_manifold(fen, 33);
  const Complex zeta(0.7, 0.4);
  Location loc;
  loc.is_tau = true;
  loc.tau = 0.2;
  CMat Ai = assemble_spectral_matrix(ctx, Scaling::inner, zeta, loc, &sm);
  CMat As = assemble_spectral_matrix(ctx, Scaling::standard, 0.01 * zeta, loc, &sm);
  Eigen::ComplexEigenSolver<CMat> ei(Ai, false), es(As, false);
  std::vector<Real> a, b;
  for (int i = 0; i < 2; ++i) {
    a.push_back(std::abs(ei.eigenvalues()[i]));
    b.push_back(std::abs(es.eigenvalues()[i]));
  }
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  CHECK(a[0] == doctest::Approx(b[0]).epsilon(1e-8));
  CHECK(a[1] == doctest::Approx(b[1]).epsilon(1e-8));
}

TEST_CASE("endpoint splitting: quadratic-formula eigenvalues and kappa = 0") {
  SpectralContext ctx = hb_context(0.1);
  SplittingReport rep = endpoint_splitting(ctx, Complex(1, 0));
  CHECK(rep.consistent);
  CHECK(rep.unstable_minus == 1);
  CHECK(rep.stable_plus == 1);
  // lambda^2 -+ 0.2 lambda - 2 = 0 at the endpoints
  const Real lam_u = 0.1 + std::sqrt(0.01 + 2.0);
  CMat Am = ctx.standard_endpoint(-1, Complex(1, 0));
  Eigen::ComplexEigenSolver<CMat> es(Am, false);
  Real best = 1e9;
  for (int i = 0; i < 2; ++i)
    best = std::min(best, std::abs(es.eigenvalues()[i] - Complex(lam_u, 0)));
  CHECK(best < 1e-12);

  SplittingReport rep0 = endpoint_splitting(ctx, Complex(0, 0));
  CHECK(!rep0.consistent);
  CHECK(rep0.center_minus >= 1);

  SplittingReport rep10 = endpoint_splitting(ctx, Complex(10, 0));
  CHECK(rep10.consistent);
  CHECK(rep10.gap > 8.0);  // dominant balance: gap ~ kappa
}

TEST_CASE("Shizuta-Kawashima check in one dimension") {
  Mat F = Mat::Zero(1, 1), G = Mat::Identity(1, 1);
  SKReport rep = shizuta_kawashima_check(F, G);
  CHECK(rep.sk1);
  CHECK(rep.sk2);
  CHECK((rep.K0 - Mat::Identity(2, 2)).norm() < 1e-14);
  CHECK(rep.theta > 0);
  CHECK(rep.nu > 0);
  // roots of lambda^2 + lambda + xi^2 = 0 at a sample xi
  const Real xi = 0.3;
  CMat M(2, 2);
  M << Complex(-1, 0), Complex(0, xi), Complex(0, xi), Complex(0, 0);
  Eigen::ComplexEigenSolver<CMat> es(M, false);
  for (int i = 0; i < 2; ++i) {
    const Complex l = es.eigenvalues()[i];
    CHECK(std::abs(l * l + l + xi * xi) < 1e-12);
  }

  Mat Fbad = Mat::Identity(1, 1);
  CHECK_THROWS_AS(shizuta_kawashima_check(Fbad, G), SKViolation);
}

TEST_CASE("dispersion bound holds on the grid") {
  SpectralContext ctx = hb_context(0.1);
  SKReport rm = shizuta_kawashima_check(ctx.Df_eps(ctx.v_minus()),
                                        ctx.Dg_eps(ctx.v_minus()));
  for (int i = 0; i < rm.xi_grid.size(); ++i) {
    const Real xi = rm.xi_grid[i];
    CHECK(rm.max_re_lambda[i] <= -rm.theta * xi * xi / (1 + xi * xi) + 1e-12);
  }
  CHECK(rm.theta > 0);
}

TEST_CASE("dispersion margin: symmetric endpoints and boundary splitting") {
  SpectralContext ctx = hb_context(0.1);
  DispersionReport rep = dispersion_margin(ctx);
  CHECK(rep.nu > 0);
  // F^- = -F^+ for this model: both endpoint reports coincide
  CHECK(rep.minus.theta == doctest::Approx(rep.plus.theta).epsilon(1e-10));
  CHECK(rep.nu == doctest::Approx(std::min(rep.minus.nu, rep.plus.nu)));
  CHECK(rep.boundary_consistent);
}

TEST_CASE("imaginary-axis points stay in the splitting region") {
  SpectralContext ctx = hb_context(0.1);
  for (Real om : {1e-3, 0.1, 1.0, 5.0}) {
    SplittingReport rep = endpoint_splitting(ctx, Complex(0.0, om));
    CHECK(rep.consistent);
  }
}

TEST_CASE("slow-fast roots and the closed-form example") {
  auto [nu1, nu2] = slow_fast_roots(-1.0, 1.0, Complex(3, 0));
  CHECK(std::abs(nu1 - Complex(1, 0)) < 1e-14);
  CHECK(std::abs(nu2 - Complex(-3, 0)) < 1e-14);
  auto [z1, z2] = slow_fast_roots(-1.0, 1.0, Complex(0, 0));
  CHECK(std::abs(z1) < 1e-14);
  CHECK(std::abs(z2 - Complex(-2, 0)) < 1e-14);
}

TEST_CASE("inner eigenvalue expansion matches direct eigensolves") {
  for (Real eps : {0.1, 0.05}) {
    SpectralContext ctx = hb_context(eps);
    InnerExpansionReport rep = inner_eigenvalue_expansion(ctx, Complex(1, 0));
    CHECK(std::abs(rep.nu1 + rep.nu2 - 2.0 * ctx.gamma0() * ctx.a()) < 1e-12);
    CHECK(std::abs(rep.nu1 * rep.nu2 + ctx.Dg0()(0, 0) * Complex(1, 0)) < 1e-12);
    for (const auto& p : rep.plus) {
      CHECK(p.order >= 1);  // n = 1: only slow-fast groups
      CHECK(p.residual < 10.0 * eps * eps);
    }
  }
  // slope of the slow-fast residual is at least quadratic
  SpectralContext c1 = hb_context(0.1), c2 = hb_context(0.05);
  auto r1 = inner_eigenvalue_expansion(c1, Complex(1, 0));
  auto r2 = inner_eigenvalue_expansion(c2, Complex(1, 0));
  for (size_t g = 0; g < r1.plus.size(); ++g) {
    const Real slope = std::log(r1.plus[g].residual / r2.plus[g].residual) /
                       std::log(2.0);
    CHECK(slope > 1.8);
  }
}

TEST_CASE("inner expansion on the decoupled model includes all groups") {
  ModelSpec md = testutil::model_d();
  ShockFamily fam = build_shock_family(md, {0.05});
  SpectralContext ctx(md, fam, 0.05);
  InnerExpansionReport rep = inner_eigenvalue_expansion(ctx, Complex(1, 0));
  int fast = 0, sf = 0, ss = 0;
  for (const auto& p : rep.plus) {
    if (p.order == 0) fast++;
    if (p.order == 1) sf++;
    if (p.order == 2) ss++;
    CHECK(p.residual < 0.05);
  }
  CHECK(fast == 1);
  CHECK(sf == 2);
  CHECK(ss == 1);
}
