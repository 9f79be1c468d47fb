// SPDX-License-Identifier: Apache-2.0
#include "evansflow/grassmann.hpp"

#include <algorithm>
#include <cmath>

#include "evansflow/ode.hpp"

namespace evansflow {

Real mgs_orthonormalize(CMat& F) {
  Real logdet = 0.0;
  for (int j = 0; j < F.cols(); ++j) {
    for (int i = 0; i < j; ++i) F.col(j) -= F.col(i).dot(F.col(j)) * F.col(i);
    // second pass for numerical orthogonality
    for (int i = 0; i < j; ++i) F.col(j) -= F.col(i).dot(F.col(j)) * F.col(i);
    const Real r = F.col(j).norm();
    if (r < 1e-300) throw Error("rank-deficient frame in orthonormalization");
    F.col(j) /= r;
    logdet += std::log(r);
  }
  return logdet;
}

Frame Frame::from_columns(const CMat& cols) {
  CMat q = cols;
  mgs_orthonormalize(q);
  return Frame(q);
}

Frame Frame::from_orthonormal(const CMat& cols, Real tol) {
  const CMat gram = cols.adjoint() * cols;
  if ((gram - CMat::Identity(cols.cols(), cols.cols())).norm() > tol)
    throw Error("columns not orthonormal");
  return Frame(cols);
}

Real gap_distance(const Frame& X, const Frame& Y) {
  if (X.ambient() != Y.ambient() || X.dim() != Y.dim())
    throw DimensionMismatch("frames of different shape");
  const CMat D = X.projector() - Y.projector();
  Eigen::SelfAdjointEigenSolver<CMat> es(D);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

CMat riccati_field(const CMat& A_B, const CMat& T) {
  const int m = static_cast<int>(T.cols());
  const int d = static_cast<int>(A_B.rows());
  if (T.rows() != d - m) throw DimensionMismatch("chart coordinate shape");
  const CMat A11 = A_B.topLeftCorner(m, m);
  const CMat A12 = A_B.topRightCorner(m, d - m);
  const CMat A21 = A_B.bottomLeftCorner(d - m, m);
  const CMat A22 = A_B.bottomRightCorner(d - m, d - m);
  return A21 + A22 * T - T * A11 - T * A12 * T;
}

GrassmannTrajectory integrate_grassmann_flow(
    const std::function<CMat(Real)>& A_of_x, const Frame& X0,
    const std::vector<Real>& checkpoints, const GrassmannFlowOptions& opt) {
  GrassmannTrajectory traj;
  if (checkpoints.empty()) return traj;
  CMat F = X0.columns();
  ode::Options oopt;
  oopt.abs_tol = opt.abs_tol;
  oopt.rel_tol = opt.rel_tol;
  auto rhs = [&](const CMat& y, CMat& dydx, Real x) { dydx = A_of_x(x) * y; };

  traj.x.push_back(checkpoints.front());
  traj.frames.push_back(Frame::from_columns(F));
  for (size_t i = 1; i < checkpoints.size(); ++i) {
    Real x = checkpoints[i - 1];
    const Real x_end = checkpoints[i];
    const Real dir = x_end > x ? 1.0 : -1.0;
    while (dir * (x_end - x) > 0) {
      const Real x_next =
          dir > 0 ? std::min(x + opt.renorm_interval, x_end)
                  : std::max(x - opt.renorm_interval, x_end);
      ode::integrate(rhs, F, x, x_next, oopt);
      mgs_orthonormalize(F);
      x = x_next;
    }
    traj.x.push_back(x_end);
    traj.frames.push_back(Frame::from_columns(F));
  }
  return traj;
}

namespace {

// Unitary completion of an orthonormal frame.
CMat orthonormal_complement(const CMat& Q) {
  const int d = static_cast<int>(Q.rows());
  const int m = static_cast<int>(Q.cols());
  Eigen::HouseholderQR<CMat> qr(Q);
  const CMat full = qr.householderQ() * CMat::Identity(d, d);
  return full.rightCols(d - m);
}

}  // namespace

GrassmannTrajectory integrate_riccati_charts(
    const std::function<CMat(Real)>& A_of_x, const Frame& X0,
    const std::vector<Real>& checkpoints, const GrassmannFlowOptions& opt) {
  GrassmannTrajectory traj;
  if (checkpoints.empty()) return traj;
  const int d = X0.ambient();
  const int m = X0.dim();

  CMat basis(d, d);  // chart basis M_B, unitary
  basis.leftCols(m) = X0.columns();
  basis.rightCols(d - m) = orthonormal_complement(X0.columns());
  CMat T = CMat::Zero(d - m, m);

  auto current_frame = [&]() {
    CMat rep(d, m);
    rep.topRows(m) = CMat::Identity(m, m);
    rep.bottomRows(d - m) = T;
    return Frame::from_columns(basis * rep);
  };
  auto recenter = [&]() {
    const Frame f = current_frame();
    basis.leftCols(m) = f.columns();
    basis.rightCols(d - m) = orthonormal_complement(f.columns());
    T.setZero();
  };

  ode::Options oopt;
  oopt.abs_tol = opt.abs_tol;
  oopt.rel_tol = opt.rel_tol;
  auto rhs = [&](const CMat& t, CMat& dtdx, Real x) {
    dtdx = riccati_field(basis.adjoint() * A_of_x(x) * basis, t);
  };

  traj.x.push_back(checkpoints.front());
  traj.frames.push_back(current_frame());
  const Real step = opt.renorm_interval;  // chart-condition checks share the cadence
  for (size_t i = 1; i < checkpoints.size(); ++i) {
    Real x = checkpoints[i - 1];
    const Real x_end = checkpoints[i];
    const Real dir = x_end > x ? 1.0 : -1.0;
    while (dir * (x_end - x) > 0) {
      const Real x_next = dir > 0 ? std::min(x + step, x_end) : std::max(x - step, x_end);
      ode::integrate(rhs, T, x, x_next, oopt);
      const Real cond = std::sqrt(1.0 + T.squaredNorm());
      if (!T.allFinite()) throw ChartExhaustion("chart coordinate blew up");
      if (cond > opt.chart_cond_limit) recenter();
      x = x_next;
    }
    traj.x.push_back(x_end);
    traj.frames.push_back(current_frame());
    recenter();
  }
  return traj;
}

EquilibriumReport classify_equilibrium(const CMat& A, const Frame& X,
                                       Real invariance_tol, Real margin_tol) {
  const int d = X.ambient();
  const int m = X.dim();
  const Real scale = std::max(1.0, A.norm());
  const CMat AX = A * X.columns();
  const CMat resid = AX - X.projector() * AX;
  if (resid.norm() > invariance_tol * scale)
    throw NotInvariant("A X not contained in X within tolerance");

  CMat basis(d, d);
  basis.leftCols(m) = X.columns();
  basis.rightCols(d - m) = orthonormal_complement(X.columns());
  const CMat A_B = basis.adjoint() * A * basis;
  const CMat Ax = A_B.topLeftCorner(m, m);
  const CMat Ay = A_B.bottomRightCorner(d - m, d - m);

  auto herm_min = [](const CMat& M) {
    Eigen::SelfAdjointEigenSolver<CMat> es(0.5 * (M + M.adjoint()));
    return es.eigenvalues().minCoeff();
  };
  auto herm_max = [](const CMat& M) {
    Eigen::SelfAdjointEigenSolver<CMat> es(0.5 * (M + M.adjoint()));
    return es.eigenvalues().maxCoeff();
  };

  EquilibriumReport rep;
  rep.c_x = herm_min(Ax);
  rep.c_y = -herm_max(Ay);
  rep.attractor_margin = rep.c_x + rep.c_y;
  rep.repeller_margin = herm_min(Ay) - herm_max(Ax);
  const Real tol = margin_tol * scale;

  if (rep.attractor_margin > tol) {
    rep.tag = EquilibriumTag::attractor;
  } else if (rep.repeller_margin > tol) {
    rep.tag = EquilibriumTag::repeller;
  } else if (Ax.norm() <= invariance_tol * scale && herm_min(Ay) < -tol &&
             herm_max(Ay) > tol) {
    // kernel chart with definite complementary blocks on both sides
    Eigen::SelfAdjointEigenSolver<CMat> es(0.5 * (Ay + Ay.adjoint()));
    const Real inner_gap = [&] {
      Real g = std::numeric_limits<Real>::infinity();
      for (int i = 0; i < es.eigenvalues().size(); ++i)
        g = std::min(g, std::abs(es.eigenvalues()[i]));
      return g;
    }();
    rep.tag = inner_gap > tol ? EquilibriumTag::saddle : EquilibriumTag::degenerate;
  } else {
    rep.tag = EquilibriumTag::degenerate;
  }
  return rep;
}

CMat dunford_taylor_projector(const CMat& M, Complex center, Real radius,
                              int quad_points) {
  const int d = static_cast<int>(M.rows());
  CMat P = CMat::Zero(d, d);
  for (int q = 0; q < quad_points; ++q) {
    const Real th = 2.0 * M_PI * (q + 0.5) / quad_points;
    const Complex w = radius * std::polar(1.0, th);
    const Complex z = center + w;
    const CMat R = (z * CMat::Identity(d, d) - M).partialPivLu().solve(
        CMat::Identity(d, d));
    P += w * R;
  }
  return P / static_cast<Real>(quad_points);
}

GroupCircle fit_group_circle(const std::vector<Complex>& inside,
                             const std::vector<Complex>& outside, Real scale) {
  if (inside.empty())
    throw EigenvalueGroupCollision("selected eigenvalue group is empty");
  GroupCircle gc;
  for (Complex z : inside) gc.center += z;
  gc.center /= static_cast<Real>(inside.size());
  Real r_in = 0.0;
  for (Complex z : inside) r_in = std::max(r_in, std::abs(z - gc.center));
  if (outside.empty()) {
    gc.gap = std::numeric_limits<Real>::infinity();
    gc.radius = r_in + std::max(1.0, r_in);
    gc.quad_points = 32;
    return gc;
  }
  Real r_out = std::numeric_limits<Real>::infinity();
  for (Complex z : outside) r_out = std::min(r_out, std::abs(z - gc.center));
  gc.gap = r_out - r_in;
  if (!(gc.gap > 1e-9 * std::max(1.0, scale)))
    throw EigenvalueGroupCollision("eigenvalue groups not separated by a circle");
  // geometric-mean radius balances the trapezoidal convergence factors
  gc.radius = std::sqrt(std::max(r_in, 0.1 * r_out) * r_out);
  const Real rho =
      std::max(r_in > 0 ? r_in / gc.radius : 0.1, gc.radius / r_out);
  const Real need = -34.0 / std::log(std::min(rho, 0.97));
  gc.quad_points = std::clamp(static_cast<int>(std::ceil(need)), 32, 1024);
  return gc;
}

CMat spectral_projector(const CMat& M, const std::function<bool(Complex)>& select,
                        Real* gap_out, int quad_points) {
  Eigen::ComplexEigenSolver<CMat> es(M, false);
  const CVec ev = es.eigenvalues();
  std::vector<Complex> in, out;
  for (int i = 0; i < ev.size(); ++i)
    (select(ev[i]) ? in : out).push_back(ev[i]);
  const GroupCircle gc = fit_group_circle(in, out, std::max(1.0, M.norm()));
  if (gap_out) *gap_out = gc.gap;
  return dunford_taylor_projector(M, gc.center, gc.radius,
                                  std::max(quad_points, gc.quad_points));
}

ProjectorPath kato_transport(
    const std::function<std::vector<CMat>(Real)>& projectors_of_t, const Vec& nodes,
    const KatoOptions& opt,
    const std::function<std::vector<CMat>(Real)>& derivatives_of_t) {
  const int m = static_cast<int>(nodes.size());
  if (m < 1) throw Error("empty node grid");
  ProjectorPath path;
  path.params = nodes;
  path.projectors.resize(static_cast<size_t>(m));
  path.transformations.resize(static_cast<size_t>(m));

  Real scale = 0.0;
  for (int i = 1; i < m; ++i) scale = std::max(scale, std::abs(nodes[i] - nodes[i - 1]));
  if (scale == 0.0) scale = std::max(1.0, std::abs(nodes[0]));
  const Real h = opt.fd_step * scale;

  auto Q_of_t = [&](Real t) {
    const std::vector<CMat> P = projectors_of_t(t);
    std::vector<CMat> dP;
    if (derivatives_of_t) {
      dP = derivatives_of_t(t);
    } else {
      const std::vector<CMat> Pp = projectors_of_t(t + h);
      const std::vector<CMat> Pm = projectors_of_t(t - h);
      dP.reserve(P.size());
      for (size_t g = 0; g < P.size(); ++g) dP.push_back((Pp[g] - Pm[g]) / (2.0 * h));
    }
    CMat Q = CMat::Zero(P[0].rows(), P[0].cols());
    for (size_t g = 0; g < P.size(); ++g) Q += dP[g] * P[g];
    return Q;
  };

  const std::vector<CMat> P0 = projectors_of_t(nodes[0]);
  const int d = static_cast<int>(P0[0].rows());
  CMat S = CMat::Identity(d, d);
  path.projectors[0] = P0;
  path.transformations[0] = S;

  auto record_residuals = [&](int idx) {
    const auto& P = path.projectors[static_cast<size_t>(idx)];
    const auto& St = path.transformations[static_cast<size_t>(idx)];
    for (size_t g = 0; g < P.size(); ++g) {
      path.max_projector_residual =
          std::max(path.max_projector_residual, (P[g] * P[g] - P[g]).norm());
      path.max_intertwine_residual = std::max(
          path.max_intertwine_residual, (St * P0[g] - P[g] * St).norm());
    }
  };
  record_residuals(0);

  auto rhs = [&](const CMat& s, CMat& dsdt, Real t) { dsdt = Q_of_t(t) * s; };
  for (int i = 1; i < m; ++i) {
    ode::rk4(rhs, S, nodes[i - 1], nodes[i], opt.substeps);
    path.projectors[static_cast<size_t>(i)] = projectors_of_t(nodes[i]);
    path.transformations[static_cast<size_t>(i)] = S;
    record_residuals(i);
  }
  if (path.max_intertwine_residual > opt.intertwine_tol)
    throw Error("Kato transport intertwining residual above tolerance");
  return path;
}

}  // namespace evansflow
