// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "evansflow/profile.hpp"
#include "test_util.hpp"

using namespace evansflow;

namespace {

ShockFamily hb_family(const ModelSpec& m, std::vector<Real> eps) {
  return build_shock_family(m, eps);
}

}  // namespace

TEST_CASE("Fenichel data of the Burgers model") {
  ModelSpec m = testutil::model_hb();
  ShockFamily fam = hb_family(m, {0.1, 0.2});
  FenichelData fen(m, fam, 0.2);
  CHECK(fen.a() == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(fen.gamma0() == doctest::Approx(1.0));
  CHECK(fen.c_eps()[0] == doctest::Approx(-0.04).epsilon(1e-12));
  // (eps^{-1} c_eps)_k = eps gamma0 a exactly for this flux
  CHECK(fen.c_eps()[0] / 0.2 == doctest::Approx(0.2 * 1.0 * -1.0).epsilon(1e-12));
  Vec u = Vec::Constant(1, 0.5);
  CHECK(fen.F(u)[0] == doctest::Approx(0.2 * (1.0 - 0.25)).epsilon(1e-12));
}

TEST_CASE("leading-order coefficient by eps-refinement") {
  // (eps^{-1} c_eps)_k = eps gamma0 a + O(eps^2), Richardson over two eps
  std::mt19937 rng(31);
  ModelSpec m0 = testutil::random_gradient_model(rng, 2, 1, true);
  NormalizationResult nr = normalize_model(m0);
  const ModelSpec& m = nr.model;
  ShockFamily fam = build_shock_family(m, {0.01, 0.02});
  FenichelData f1(m, fam, 0.01), f2(m, fam, 0.02);
  const int ki = m.k_index();
  const Real r1 = f1.c_eps()[ki] / (0.01 * 0.01);
  const Real r2 = f2.c_eps()[ki] / (0.02 * 0.02);
  const Real extrap = 2.0 * r1 - r2;  // removes the O(eps) correction
  CHECK(extrap == doctest::Approx(f1.gamma0() * f1.a()).epsilon(5e-3));
}

TEST_CASE("slow manifold of the Burgers model is the diagonal") {
  ModelSpec m = testutil::model_hb();
  ShockFamily fam = hb_family(m, {0.2});
  FenichelData fen(m, fam, 0.2);
  SlowManifold sm = compute_slow_manifold(fen, 33);
  for (int j = 0; j < sm.tau.size(); ++j) {
    CHECK(sm.u(0, j) == doctest::Approx(sm.tau[j]).epsilon(1e-13));
    CHECK(sm.h[j] == doctest::Approx(1.0).epsilon(1e-11));
  }
  CHECK(sm.h_at(0.37) == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("slow manifold of the decoupled model keeps u2 = 0") {
  ModelSpec m = testutil::model_d();
  ShockFamily fam = hb_family(m, {0.1});
  FenichelData fen(m, fam, 0.1);
  SlowManifold sm = compute_slow_manifold(fen, 33);
  CHECK(sm.u.row(1).cwiseAbs().maxCoeff() < 1e-12);
  for (int j = 0; j < sm.tau.size(); ++j)
    CHECK(sm.h[j] == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("slow manifold h tends to -gamma0 a with O(eps) error") {
  std::mt19937 rng(37);
  ModelSpec m0 = testutil::random_gradient_model(rng, 3, 1, true);
  NormalizationResult nr = normalize_model(m0);
  const ModelSpec& m = nr.model;
  ShockFamily fam = build_shock_family(m, {0.005, 0.01, 0.02, 0.04});
  Real prev_err = 0.0;
  std::vector<Real> errs;
  for (Real eps : {0.01, 0.02, 0.04}) {
    FenichelData fen(m, fam, eps);
    SlowManifold sm = compute_slow_manifold(fen, 33);
    Real worst = 0.0;
    for (int j = 0; j < sm.tau.size(); ++j)
      worst = std::max(worst, std::abs(sm.h[j] + fen.gamma0() * fen.a()));
    errs.push_back(worst);
  }
  (void)prev_err;
  // fitted constant from the two smallest eps bounds the largest
  const Real c = std::max(errs[0] / 0.01, errs[1] / 0.02);
  CHECK(errs[2] <= 3.0 * c * 0.04 + 1e-12);
}

TEST_CASE("profile of the Burgers model is the exact tanh front") {
  ModelSpec m = testutil::model_hb();
  ShockFamily fam = hb_family(m, {0.2});
  FenichelData fen(m, fam, 0.2);
  SlowManifold sm = compute_slow_manifold(fen, 33);
  ProfileGrid grid = integrate_profile(fen, sm, 100.0);
  CHECK(grid.phi(0, (grid.x.size() - 1) / 2) == doctest::Approx(0.0).epsilon(1e-12));
  Real worst = 0.0;
  for (int c = 0; c < grid.x.size(); ++c)
    worst = std::max(worst,
                     std::abs(grid.phi(0, c) - 0.2 * std::tanh(0.2 * grid.x[c])));
  CHECK(worst < 1e-9);
  // dense interpolation matches the closed form between nodes
  CHECK(grid.phi_at(5.0)[0] == doctest::Approx(0.2 * std::tanh(1.0)).epsilon(1e-10));
  CHECK(grid.chi_at(5.0) == doctest::Approx(std::tanh(1.0)).epsilon(1e-8));
  // monotone slow coordinate inside (-1, 1)
  for (int c = 1; c < grid.x.size(); ++c) {
    CHECK(grid.chi[c] >= grid.chi[c - 1] - 1e-14);
    CHECK(std::abs(grid.chi[c]) <= 1.0);
  }
}

TEST_CASE("decoupled profile keeps the second component at zero") {
  ModelSpec m = testutil::model_d();
  ShockFamily fam = hb_family(m, {0.1});
  FenichelData fen(m, fam, 0.1);
  SlowManifold sm = compute_slow_manifold(fen, 33);
  ProfileGrid grid = integrate_profile(fen, sm, 120.0);
  CHECK(grid.phi.row(1).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("profile residual: analytic grid, equilibrium, perturbation") {
  ModelSpec m = testutil::model_hb();
  ShockFamily fam = hb_family(m, {0.2});
  FenichelData fen(m, fam, 0.2);
  SlowManifold sm = compute_slow_manifold(fen, 33);

  auto tanh_grid = [&](Real h) {
    ProfileGrid g;
    g.eps = 0.2;
    g.L = 40.0;
    g.h = h;
    const int half = static_cast<int>(g.L / h);
    const int mm = 2 * half + 1;
    g.x = Vec::LinSpaced(mm, -g.L, g.L);
    g.phi = Mat(1, mm);
    for (int c = 0; c < mm; ++c) g.phi(0, c) = 0.2 * std::tanh(0.2 * g.x[c]);
    return g;
  };
  const Real r1 = profile_residual(fen, tanh_grid(0.1));
  const Real r2 = profile_residual(fen, tanh_grid(0.05));
  CHECK(r1 / r2 > 3.0);  // second-order stencil
  CHECK(r1 / r2 < 5.0);

  ProfileGrid flat = tanh_grid(0.1);
  flat.phi.setConstant(-0.2);  // v^- equilibrium
  CHECK(profile_residual(fen, flat) < 1e-14);

  ProfileGrid bumped = tanh_grid(0.1);
  bumped.phi.array() += 0.01;
  CHECK(profile_residual(fen, bumped) > 1e-3);
}

TEST_CASE("profile matches eps u(chi) uniformly") {
  std::mt19937 rng(41);
  ModelSpec m0 = testutil::random_gradient_model(rng, 2, 1, true);
  NormalizationResult nr = normalize_model(m0);
  const ModelSpec& m = nr.model;
  ShockFamily fam = build_shock_family(m, {0.05});
  FenichelData fen(m, fam, 0.05);
  SlowManifold sm = compute_slow_manifold(fen, 49);
  const Real L = 10.0 / (0.05 * std::abs(fen.gamma0() * fen.a()));
  ProfileGrid grid = integrate_profile(fen, sm, L);
  Real worst = 0.0;
  for (int c = 0; c < grid.x.size(); ++c)
    worst = std::max(worst,
                     (grid.phi.col(c) - 0.05 * sm.u_at(grid.chi[c])).norm());
  CHECK(worst < 1e-7);
  // translation mode satisfies the linearized equation to stencil order
  const int mm = static_cast<int>(grid.x.size());
  Real worst_lin = 0.0;
  for (int c = mm / 4; c < 3 * mm / 4; ++c) {
    const Vec lhs = (grid.dphi.col(c + 1) - grid.dphi.col(c - 1)) / (2 * grid.h);
    const Vec rhs = fen.boosted().Df(grid.phi.col(c)) * grid.dphi.col(c);
    worst_lin = std::max(worst_lin, (lhs - rhs).norm());
  }
  CHECK(worst_lin < 1e-6);
}

TEST_CASE("short truncation is rejected") {
  ModelSpec m = testutil::model_hb();
  ShockFamily fam = hb_family(m, {0.2});
  FenichelData fen(m, fam, 0.2);
  SlowManifold sm = compute_slow_manifold(fen, 33);
  CHECK_THROWS(integrate_profile(fen, sm, 5.0));
}
