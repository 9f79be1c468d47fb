// SPDX-License-Identifier: Apache-2.0
#include "evansflow/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace evansflow {

namespace {

Real min_eigenvalue_sym(const Mat& M) {
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (M + M.transpose()));
  return es.eigenvalues().minCoeff();
}

// Largest-magnitude entry made positive; strict ">" keeps the lowest index
// on ties.
void fix_column_signs(Mat& R) {
  for (int j = 0; j < R.cols(); ++j) {
    int imax = 0;
    for (int i = 1; i < R.rows(); ++i)
      if (std::abs(R(i, j)) > std::abs(R(imax, j))) imax = i;
    if (R(imax, j) < 0) R.col(j) = -R.col(j);
  }
}

}  // namespace

ModelSpec::ModelSpec(int n, int k, PolyMap f, PolyMap g, Mat B, Vec u_star,
                     Real delta, Tolerances tol)
    : n_(n),
      k_(k),
      f_(std::move(f)),
      g_(std::move(g)),
      B_(std::move(B)),
      u_star_(std::move(u_star)),
      delta_(delta),
      tol_(tol) {
  if (n_ < 1 || n_ > kMaxDim) throw ConfigError("state dimension out of range");
  if (k_ != 1 && k_ != n_) throw ConfigError("only extreme families k in {1, n}");
  if (static_cast<int>(f_.size()) != n_ || static_cast<int>(g_.size()) != n_)
    throw ConfigError("flux component count mismatch");
  if (delta_ <= 0) throw ConfigError("domain radius must be positive");
  for (const auto& p : f_)
    if (p.degree() > 4) throw ConfigError("flux degree exceeds 4");
  for (const auto& p : g_)
    if (p.degree() > 4) throw ConfigError("flux degree exceeds 4");
  df_.reserve(static_cast<size_t>(n_));
  dg_.reserve(static_cast<size_t>(n_));
  for (int j = 0; j < n_; ++j) {
    df_.push_back(jacobian_row_map(f_, j));
    dg_.push_back(jacobian_row_map(g_, j));
  }
}

Vec ModelSpec::D2f(const Vec& v, const Vec& u) const {
  Vec out = Vec::Zero(n_);
  for (int j = 0; j < n_; ++j) {
    Mat Hcol(n_, n_);
    for (int l = 0; l < n_; ++l)
      for (int i = 0; i < n_; ++i)
        Hcol(i, l) = df_[static_cast<size_t>(j)][static_cast<size_t>(i)].derivative(l).eval(v);
    out += u[j] * (Hcol * u);
  }
  return out;
}

Vec ModelSpec::D2g(const Vec& v, const Vec& u) const {
  Vec out = Vec::Zero(n_);
  for (int j = 0; j < n_; ++j) {
    Mat Hcol(n_, n_);
    for (int l = 0; l < n_; ++l)
      for (int i = 0; i < n_; ++i)
        Hcol(i, l) = dg_[static_cast<size_t>(j)][static_cast<size_t>(i)].derivative(l).eval(v);
    out += u[j] * (Hcol * u);
  }
  return out;
}

Real ModelSpec::d2_kk(const PolyMap& map, int comp, int var) const {
  return map[static_cast<size_t>(comp)].derivative(var).derivative(var).eval(
      Vec::Zero(n_));
}

EigenData eigen_fields(const ModelSpec& model, const Vec& v) {
  Mat A = model.Df(v);
  Mat G = model.Dg(v);
  Eigen::GeneralizedSelfAdjointEigenSolver<Mat> es(0.5 * (A + A.transpose()),
                                                   0.5 * (G + G.transpose()));
  if (es.info() != Eigen::Success) throw DegenerateMetric("generalized eigensolve failed");
  EigenData out;
  out.mu = es.eigenvalues();
  out.r = es.eigenvectors();  // r^T Dg r = I, ascending eigenvalues
  for (int i = 0; i + 1 < model.n(); ++i)
    if (out.mu[i + 1] - out.mu[i] < model.tol().eigenvalue_gap)
      throw EigenvalueCollision("generalized eigenvalues closer than gap tolerance");
  fix_column_signs(out.r);
  return out;
}

AssumptionReport validate_assumptions(const ModelSpec& model, int sample_count,
                                      unsigned seed) {
  AssumptionReport rep;
  const int n = model.n();
  const Vec& u0 = model.u_star();

  // A1: symmetry exact on coefficients, definiteness at the base point.
  if (!jacobian_symmetric(model.f()))
    throw NonSymmetricFlux("Df not symmetric at coefficient level");
  if (!jacobian_symmetric(model.g()))
    throw NonSymmetricFlux("Dg not symmetric at coefficient level");
  const bool b_sym = (model.B() - model.B().transpose()).norm() == 0.0;
  rep.margin_B = min_eigenvalue_sym(model.B());
  rep.margin_Dg = min_eigenvalue_sym(model.Dg(u0));
  if (rep.margin_Dg <= 0) throw DegenerateMetric("Dg(u*) not positive definite");
  rep.a1 = b_sym && rep.margin_B > 0 && rep.margin_Dg > 0;

  // A2: real simple generalized eigenvalues at u*.
  EigenData ed = eigen_fields(model, u0);
  rep.eigenvalue_gap = std::numeric_limits<Real>::infinity();
  for (int i = 0; i + 1 < n; ++i)
    rep.eigenvalue_gap = std::min(rep.eigenvalue_gap, ed.mu[i + 1] - ed.mu[i]);
  if (n == 1) rep.eigenvalue_gap = std::numeric_limits<Real>::infinity();
  rep.a2 = rep.eigenvalue_gap > model.tol().eigenvalue_gap;

  // A4: sub-characteristic condition at u*.
  const Mat Dfu = model.Df(u0), Dgu = model.Dg(u0);
  rep.margin_subchar =
      std::min(min_eigenvalue_sym(Dgu + Dfu), min_eigenvalue_sym(Dgu - Dfu));
  rep.a4 = rep.margin_subchar > model.tol().definiteness_margin;

  // A3: genuine nonlinearity of the k-th field at u*, via central differences
  // of mu_k along r_k.
  const int ki = model.k_index();
  const Vec rk = ed.r.col(ki);
  const Real h = 1e-5 * std::max(1.0, u0.norm());
  auto mu_k_at = [&](Real t) {
    return eigen_fields(model, Vec(u0 + t * rk)).mu[ki];
  };
  rep.gnl_value = (mu_k_at(h) - mu_k_at(-h)) / (2 * h);
  rep.a_value = rep.gnl_value / (2.0 * std::pow(rk.norm(), 3));
  rep.a3 = rep.gnl_value < 0;

  const Real mu_k0 = ed.mu[ki];
  rep.gamma0 = std::abs(mu_k0) < 1.0 ? lorentz_gamma(mu_k0)
                                     : std::numeric_limits<Real>::quiet_NaN();

  // Sampled diagnostics on B_delta(u*).
  rep.ball_metric_margin = rep.margin_Dg;
  rep.ball_subchar_margin = rep.margin_subchar;
  rep.ball_speed_margin = 1.0 - ed.mu.cwiseAbs().maxCoeff();
  std::mt19937 rng(seed);
  std::normal_distribution<Real> gauss(0.0, 1.0);
  std::uniform_real_distribution<Real> unif(0.0, 1.0);
  for (int srow = 0; srow < sample_count; ++srow) {
    Vec dir(n);
    for (int i = 0; i < n; ++i) dir[i] = gauss(rng);
    if (dir.norm() == 0) continue;
    dir *= model.delta() * std::pow(unif(rng), 1.0 / n) / dir.norm();
    Vec v = u0 + dir;
    const Mat Dfv = model.Df(v), Dgv = model.Dg(v);
    rep.ball_metric_margin = std::min(rep.ball_metric_margin, min_eigenvalue_sym(Dgv));
    rep.ball_subchar_margin =
        std::min({rep.ball_subchar_margin, min_eigenvalue_sym(Dgv + Dfv),
                  min_eigenvalue_sym(Dgv - Dfv)});
    if (rep.ball_metric_margin > 0) {
      Eigen::GeneralizedSelfAdjointEigenSolver<Mat> es(
          0.5 * (Dfv + Dfv.transpose()), 0.5 * (Dgv + Dgv.transpose()));
      rep.ball_speed_margin =
          std::min(rep.ball_speed_margin, 1.0 - es.eigenvalues().cwiseAbs().maxCoeff());
    }
  }
  return rep;
}

NormalizationResult normalize_model(const ModelSpec& model) {
  const int n = model.n();
  // Translate the base point to the origin and drop the constant fluxes.
  PolyMap f1 = compose_affine(model.f(), Mat::Identity(n, n), model.u_star());
  PolyMap g1 = compose_affine(model.g(), Mat::Identity(n, n), model.u_star());
  const Vec f0 = eval(f1, Vec::Zero(n)), g0 = eval(g1, Vec::Zero(n));
  for (int i = 0; i < n; ++i) {
    f1[static_cast<size_t>(i)] -= Polynomial::constant(n, f0[i]);
    g1[static_cast<size_t>(i)] -= Polynomial::constant(n, g0[i]);
  }

  // Reduce the wave operator to the identity: left-multiply by B^{-1/2} and
  // substitute v = B^{-1/2} w.
  Eigen::SelfAdjointEigenSolver<Mat> esB(0.5 * (model.B() + model.B().transpose()));
  if (esB.eigenvalues().minCoeff() <= 0)
    throw DegenerateMetric("B not positive definite");
  const Mat b_sqrt = esB.operatorSqrt();
  const Mat b_isqrt = esB.operatorInverseSqrt();
  PolyMap f2 = left_multiply(b_isqrt, compose_affine(f1, b_isqrt, Vec::Zero(n)));
  PolyMap g2 = left_multiply(b_isqrt, compose_affine(g1, b_isqrt, Vec::Zero(n)));
  f2 = symmetrize_jacobian(f2);
  g2 = symmetrize_jacobian(g2);
  const Real delta2 = model.delta() * std::sqrt(esB.eigenvalues().minCoeff());

  ModelSpec stage2(n, model.k(), f2, g2, Mat::Identity(n, n), Vec::Zero(n), delta2,
                   model.tol());

  // Orthogonal change diagonalizing Df(0) - mu_k(0) Dg(0) with the zero
  // eigenvalue in slot k and e_k = r_k(0)/|r_k(0)|.
  EigenData ed = eigen_fields(stage2, Vec::Zero(n));
  const int ki = model.k_index();
  const Real mu_k0 = ed.mu[ki];
  const Mat F = stage2.Df(Vec::Zero(n)) - mu_k0 * stage2.Dg(Vec::Zero(n));
  Eigen::SelfAdjointEigenSolver<Mat> esF(0.5 * (F + F.transpose()));
  Mat Q = esF.eigenvectors();  // ascending eigenvalues
  fix_column_signs(Q);
  const Vec lam = esF.eigenvalues();
  // Extreme family: the zero eigenvalue of F sits at slot k after sorting.
  const Real scaleF = std::max(1.0, lam.cwiseAbs().maxCoeff());
  if (std::abs(lam[ki]) > 1e3 * model.tol().diagonalization * scaleF)
    throw NotDiagonalizable("slot-k eigenvalue of Df(0)-mu_k Dg(0) not zero");
  // Align column k with the unit kernel vector r_k/|r_k| (same sign fix).
  Vec rk_unit = ed.r.col(ki) / ed.r.col(ki).norm();
  if (Q.col(ki).dot(rk_unit) < 0) Q.col(ki) = -Q.col(ki);
  if ((Q.col(ki) - rk_unit).norm() > 1e-6)
    throw NotDiagonalizable("kernel direction of F does not match r_k(0)");

  PolyMap f3 = left_multiply(Q.transpose(), compose_affine(f2, Q, Vec::Zero(n)));
  PolyMap g3 = left_multiply(Q.transpose(), compose_affine(g2, Q, Vec::Zero(n)));
  f3 = symmetrize_jacobian(f3);
  g3 = symmetrize_jacobian(g3);
  for (auto& p : f3) p.canonicalize(1e-14);
  for (auto& p : g3) p.canonicalize(1e-14);

  ModelSpec out(n, model.k(), f3, g3, Mat::Identity(n, n), Vec::Zero(n), delta2,
                model.tol());
  const Mat Fd = out.Df(Vec::Zero(n)) - mu_k0 * out.Dg(Vec::Zero(n));
  Mat offd = Fd;
  offd.diagonal().setZero();
  if (offd.norm() > model.tol().diagonalization * scaleF)
    throw NotDiagonalizable("diagonalization residual above tolerance");
  return NormalizationResult{std::move(out), Q, b_sqrt};
}

Real genuine_nonlinearity_coeff(const ModelSpec& model) {
  const int ki = model.k_index();
  EigenData ed = eigen_fields(model, Vec::Zero(model.n()));
  const Vec rk = ed.r.col(ki);
  const Real h = 1e-5;
  auto mu_k_at = [&](Real t) { return eigen_fields(model, Vec(t * rk)).mu[ki]; };
  const Real fd = (mu_k_at(h) - mu_k_at(-h)) / (2 * h);
  const Real closed = std::pow(rk.norm(), 3) *
                      (model.d2_kk(model.f(), ki, ki) -
                       ed.mu[ki] * model.d2_kk(model.g(), ki, ki));
  const Real scale = std::max({std::abs(fd), std::abs(closed), 1e-12});
  if (std::abs(fd - closed) > model.tol().gnl_agreement * scale)
    throw Error("genuine-nonlinearity routes disagree beyond tolerance");
  if (closed >= 0)
    throw GNLViolation("k-th field not genuinely nonlinear in the assumed direction");
  return closed;
}

Real lorentz_gamma(Real s) {
  if (std::abs(s) >= 1.0) throw SuperluminalSpeed("|s| >= 1");
  return 1.0 / std::sqrt(1.0 - s * s);
}

ModelSpec lorentz_boost(const ModelSpec& model, Real s) {
  const Real gamma = lorentz_gamma(s);
  PolyMap fs = linear_combination(gamma, model.f(), -gamma * s, model.g());
  PolyMap gs = linear_combination(gamma, model.g(), -gamma * s, model.f());
  ModelSpec boosted(model.n(), model.k(), std::move(fs), std::move(gs), model.B(),
                    model.u_star(), model.delta(), model.tol());
  // Spot-check the eigenvalue transformation law at the base point.
  EigenData before = eigen_fields(model, model.u_star());
  EigenData after = eigen_fields(boosted, model.u_star());
  for (int j = 0; j < model.n(); ++j) {
    const Real expect = (before.mu[j] - s) / (1.0 - before.mu[j] * s);
    if (std::abs(after.mu[j] - expect) > model.tol().boost_check *
                                             std::max(1.0, std::abs(expect)))
      throw Error("boosted eigenvalues violate the transformation law");
  }
  return boosted;
}

Inertia inertia_split(const Mat& F, const Mat& Vminus, const Mat& Vplus,
                      Real margin, Real zero_tol) {
  const int n = static_cast<int>(F.rows());
  if (F.cols() != n) throw DimensionMismatch("F must be square");
  const int dm = static_cast<int>(Vminus.cols());
  const int dp = static_cast<int>(Vplus.cols());

  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (F + F.transpose()));
  const Vec lam = es.eigenvalues();
  Inertia inertia;
  for (int i = 0; i < n; ++i) {
    if (lam[i] < -zero_tol)
      inertia.neg++;
    else if (lam[i] > zero_tol)
      inertia.pos++;
    else
      inertia.zero++;
  }

  auto definite_margin = [&](const Mat& V, int sign) -> Real {
    if (V.cols() == 0) return std::numeric_limits<Real>::infinity();
    Eigen::HouseholderQR<Mat> qr(V);
    Mat W = qr.householderQ() * Mat::Identity(n, static_cast<int>(V.cols()));
    Mat P = W.transpose() * F * W;
    Eigen::SelfAdjointEigenSolver<Mat> esp(0.5 * (P + P.transpose()));
    return sign > 0 ? esp.eigenvalues().minCoeff() : -esp.eigenvalues().maxCoeff();
  };
  if (definite_margin(Vminus, -1) < margin)
    throw SplittingInvalid("F not negative definite on V-");
  if (definite_margin(Vplus, +1) < margin)
    throw SplittingInvalid("F not positive definite on V+");
  if (dm + dp + inertia.zero != n)
    throw SplittingInvalid("V- + ker F + V+ does not span");
  if (inertia.neg != dm || inertia.pos != dp)
    throw SplittingInvalid("inertia does not match the splitting dimensions");
  return inertia;
}

}  // namespace evansflow
