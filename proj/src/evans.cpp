// SPDX-License-Identifier: Apache-2.0
#include "evansflow/evans.hpp"

#include <algorithm>
#include <cmath>
#include <atomic>
#include <mutex>
#include <thread>

#include "evansflow/ode.hpp"

namespace evansflow {

const char* regime_name(Regime r) {
  switch (r) {
    case Regime::inner: return "inner";
    case Regime::outer: return "outer";
    case Regime::outmost: return "outmost";
  }
  return "?";
}

Regime regime_partition(Real eps, Complex kappa, Real r0, Real r1) {
  if (r0 <= 0 || r1 <= 0) throw Error("regime radii must be positive");
  const Real mag = std::abs(kappa);
  if (mag <= r0 * eps * eps) return Regime::inner;
  if (mag >= r1) return Regime::outmost;
  return Regime::outer;
}

namespace {

void fix_phase(CMat& cols) {
  for (int j = 0; j < cols.cols(); ++j) {
    int imax = 0;
    for (int i = 1; i < cols.rows(); ++i)
      if (std::abs(cols(i, j)) > std::abs(cols(imax, j))) imax = i;
    const Complex z = cols(imax, j);
    if (std::abs(z) > 0) cols.col(j) *= std::conj(z) / std::abs(z);
  }
}

struct GroupSplit {
  CMat stable, unstable;      // eigenvector bases
  Complex trace_stable{0, 0};
  Complex trace_unstable{0, 0};
  int center = 0;
};

GroupSplit split_by_real_part(const CMat& A, Real center_tol) {
  Eigen::ComplexEigenSolver<CMat> es(A);
  const CVec ev = es.eigenvalues();
  const int d = static_cast<int>(ev.size());
  std::vector<int> idx_s, idx_u;
  GroupSplit out;
  for (int i = 0; i < d; ++i) {
    if (ev[i].real() > center_tol) {
      idx_u.push_back(i);
      out.trace_unstable += ev[i];
    } else if (ev[i].real() < -center_tol) {
      idx_s.push_back(i);
      out.trace_stable += ev[i];
    } else {
      out.center++;
    }
  }
  auto order = [&](std::vector<int>& idx, bool desc) {
    std::sort(idx.begin(), idx.end(), [&](int a, int b) {
      const Real ra = desc ? -ev[a].real() : ev[a].real();
      const Real rb = desc ? -ev[b].real() : ev[b].real();
      if (ra != rb) return ra < rb;
      return ev[a].imag() < ev[b].imag();
    });
  };
  order(idx_u, true);
  order(idx_s, false);
  out.stable.resize(d, static_cast<int>(idx_s.size()));
  out.unstable.resize(d, static_cast<int>(idx_u.size()));
  for (size_t c = 0; c < idx_s.size(); ++c) out.stable.col(static_cast<int>(c)) = es.eigenvectors().col(idx_s[c]);
  for (size_t c = 0; c < idx_u.size(); ++c) out.unstable.col(static_cast<int>(c)) = es.eigenvectors().col(idx_u[c]);
  fix_phase(out.stable);
  fix_phase(out.unstable);
  return out;
}

// First-order split of the kernel of A under the perturbation A + param dA:
// returns directions whose eigenvalue derivative has negative (stable) or
// positive (unstable) real part.
void kernel_split(const CMat& A, const CMat& dA, CMat& stable_out, CMat& unstable_out) {
  const int d = static_cast<int>(A.rows());
  Eigen::JacobiSVD<CMat> svd(A, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Real smax = svd.singularValues().maxCoeff();
  int nk = 0;
  for (int i = 0; i < d; ++i)
    if (svd.singularValues()[i] < 1e-10 * std::max(1.0, smax)) nk++;
  if (nk == 0) {
    stable_out.resize(d, 0);
    unstable_out.resize(d, 0);
    return;
  }
  const CMat K = svd.matrixV().rightCols(nk);
  const CMat Y = svd.matrixU().rightCols(nk);
  const CMat G = Y.adjoint() * K;
  const CMat M = G.partialPivLu().solve(Y.adjoint() * dA * K);
  Eigen::ComplexEigenSolver<CMat> es(M);
  std::vector<int> idx_s, idx_u;
  for (int i = 0; i < nk; ++i)
    (es.eigenvalues()[i].real() < 0 ? idx_s : idx_u).push_back(i);
  stable_out.resize(d, static_cast<int>(idx_s.size()));
  unstable_out.resize(d, static_cast<int>(idx_u.size()));
  for (size_t c = 0; c < idx_s.size(); ++c)
    stable_out.col(static_cast<int>(c)) = K * es.eigenvectors().col(idx_s[c]);
  for (size_t c = 0; c < idx_u.size(); ++c)
    unstable_out.col(static_cast<int>(c)) = K * es.eigenvectors().col(idx_u[c]);
  fix_phase(stable_out);
  fix_phase(unstable_out);
}

CMat hstack(const CMat& a, const CMat& b) {
  CMat out(a.rows(), a.cols() + b.cols());
  out << a, b;
  return out;
}

}  // namespace

EvansEvaluator::EvansEvaluator(SpectralContext ctx, const ProfileGrid* profile,
                               EvansOptions opt)
    : ctx_(std::move(ctx)), profile_(profile), opt_(opt) {}

CMat EvansEvaluator::endpoint_matrix(int side, Complex param, Scaling scaling) const {
  return scaling == Scaling::standard ? ctx_.standard_endpoint(side, param)
                                      : ctx_.inner_endpoint(side, param);
}

namespace {

CMat d_matrix_d_param(const SpectralContext& ctx, int side, Complex param,
                      Scaling scaling) {
  const int n = ctx.n();
  const Vec& v = side < 0 ? ctx.v_minus() : ctx.v_plus();
  CMat dA = CMat::Zero(2 * n, 2 * n);
  if (scaling == Scaling::standard) {
    dA.bottomLeftCorner(n, n) =
        2.0 * param * CMat::Identity(n, n) + ctx.Dg_eps(v).cast<Complex>();
  } else {
    const Real e = ctx.eps();
    dA.bottomLeftCorner(n, n) = 2.0 * e * e * e * param * CMat::Identity(n, n) +
                                e * ctx.Dg_eps(v).cast<Complex>();
  }
  return dA;
}

}  // namespace

BoundaryFrames EvansEvaluator::init_frames(Complex param, Scaling scaling) const {
  const int n = ctx_.n();
  BoundaryFrames fr;
  fr.param = param;
  fr.scaling = scaling;

  if (param == Complex(0, 0) && scaling == Scaling::standard)
    throw SplittingLost("kappa = 0 is outside the consistent-splitting region");

  const CMat Am = endpoint_matrix(-1, param, scaling);
  const CMat Ap = endpoint_matrix(+1, param, scaling);
  GroupSplit gm = split_by_real_part(Am, opt_.center_tol);
  GroupSplit gp = split_by_real_part(Ap, opt_.center_tol);
  fr.trace_unstable_minus = gm.trace_unstable;
  fr.trace_stable_plus = gp.trace_stable;

  if (gm.unstable.cols() == n && gp.stable.cols() == n) {
    fr.U_minus = gm.unstable;
    fr.S_plus = gp.stable;
    return fr;
  }
  if (scaling == Scaling::inner) {
    // Degenerate groups at zeta near 0 split at first order in zeta.
    CMat ks, ku;
    kernel_split(Am, d_matrix_d_param(ctx_, -1, param, scaling), ks, ku);
    if (gm.unstable.cols() + ku.cols() == n) fr.U_minus = hstack(gm.unstable, ku);
    kernel_split(Ap, d_matrix_d_param(ctx_, +1, param, scaling), ks, ku);
    if (gp.stable.cols() + ks.cols() == n && fr.U_minus.cols() == n) {
      fr.S_plus = hstack(gp.stable, ks);
      return fr;
    }
  }
  throw SplittingLost("endpoint splitting is not n/n at the requested parameter");
}

BoundaryFrames EvansEvaluator::continue_frames(const BoundaryFrames& from,
                                               Complex to) const {
  if (to == from.param) return from;
  const Complex p0 = from.param;
  const Complex dp = to - p0;
  // reject paths through the origin (splitting fails there)
  {
    const Complex a = -p0;
    const Real t_star = std::clamp((a.real() * dp.real() + a.imag() * dp.imag()) /
                                       std::norm(dp), 0.0, 1.0);
    if (std::abs(p0 + t_star * dp) < 1e-14 * std::max(std::abs(p0), std::abs(to)))
      throw SplittingLost("continuation path crosses the origin");
  }

  const int n = ctx_.n();

  auto transport = [&](int side, bool unstable, CMat F) {
    auto rhs = [&](const CMat& f, CMat& dfdt, Real t) {
      const Complex p = p0 + t * dp;
      const CMat A = endpoint_matrix(side, p, from.scaling);
      const CMat dA = d_matrix_d_param(ctx_, side, p, from.scaling) * dp;
      // enclosing circle of the selected eigenvalue group
      Eigen::ComplexEigenSolver<CMat> es(A, false);
      std::vector<Complex> in, out;
      for (int i = 0; i < es.eigenvalues().size(); ++i) {
        const Complex ev = es.eigenvalues()[i];
        const bool sel = unstable ? ev.real() > 0 : ev.real() < 0;
        (sel ? in : out).push_back(ev);
      }
      if (static_cast<int>(in.size()) != n)
        throw SplittingLost("group dimension changed along the continuation path");
      const GroupCircle gc = fit_group_circle(in, out, std::max(1.0, A.norm()));
      const int quad = std::max(opt_.quad_points, gc.quad_points);

      const int d2 = 2 * n;
      CMat P = CMat::Zero(d2, d2), dP = CMat::Zero(d2, d2);
      for (int q = 0; q < quad; ++q) {
        const Real th = 2.0 * M_PI * (q + 0.5) / quad;
        const Complex w = gc.radius * std::polar(1.0, th);
        const Complex z = gc.center + w;
        Eigen::PartialPivLU<CMat> lu(z * CMat::Identity(d2, d2) - A);
        const CMat R = lu.solve(CMat::Identity(d2, d2));
        P += w * R;
        dP += w * (R * (dA * R));
      }
      P /= static_cast<Real>(quad);
      dP /= static_cast<Real>(quad);
      dfdt = dP * (2.0 * P - CMat::Identity(d2, d2)) * f;
    };
    const int steps = std::max(opt_.kato_substeps,
                               static_cast<int>(std::ceil(64.0 * std::abs(dp))));
    ode::rk4(rhs, F, 0.0, 1.0, steps);
    return F;
  };

  BoundaryFrames out;
  out.param = to;
  out.scaling = from.scaling;
  out.U_minus = transport(-1, true, from.U_minus);
  out.S_plus = transport(+1, false, from.S_plus);
  GroupSplit gm = split_by_real_part(endpoint_matrix(-1, to, from.scaling), opt_.center_tol);
  GroupSplit gp = split_by_real_part(endpoint_matrix(+1, to, from.scaling), opt_.center_tol);
  out.trace_unstable_minus = gm.trace_unstable;
  out.trace_stable_plus = gp.trace_stable;
  return out;
}

BoundaryFrames EvansEvaluator::init_frames_path(const std::vector<Complex>& path,
                                                Scaling scaling) const {
  if (path.empty()) throw Error("empty continuation path");
  BoundaryFrames fr = init_frames(path.front(), scaling);
  for (size_t i = 1; i < path.size(); ++i) fr = continue_frames(fr, path[i]);
  return fr;
}

EvansEvaluator::PropagatedFrames EvansEvaluator::propagate_frames(
    const BoundaryFrames& frames) const {
  if (profile_ == nullptr) throw Error("no profile attached");
  const Real L = profile_->L;
  const Complex param = frames.param;
  const Scaling sc = frames.scaling;

  // renormalization cadence from the strongest endpoint growth rate
  Real max_rate = 0.1;
  for (int side : {-1, +1}) {
    Eigen::ComplexEigenSolver<CMat> es(endpoint_matrix(side, param, sc), false);
    for (int i = 0; i < es.eigenvalues().size(); ++i)
      max_rate = std::max(max_rate, std::abs(es.eigenvalues()[i].real()));
  }
  const Real renorm_dx = std::clamp(opt_.renorm_max_growth / max_rate, 1e-3, L / 4.0);

  ode::Options oopt;
  oopt.abs_tol = opt_.ode_abs_tol;
  oopt.rel_tol = opt_.ode_rel_tol;

  auto propagate = [&](CMat F, Real x_from, Real x_to, Real& log_r) {
    log_r += mgs_orthonormalize(F);
    auto rhs = [&](const CMat& f, CMat& dfdx, Real x) {
      const Vec v = profile_->phi_at(x);
      const CMat A = sc == Scaling::standard ? ctx_.standard_at_v(v, param)
                                             : ctx_.inner_at_v(v, param);
      dfdx = A * f;
    };
    Real x = x_from;
    const Real dir = x_to > x_from ? 1.0 : -1.0;
    try {
      while (dir * (x_to - x) > 1e-14 * L) {
        const Real x_next = dir > 0 ? std::min(x + renorm_dx, x_to)
                                    : std::max(x - renorm_dx, x_to);
        ode::integrate(rhs, F, x, x_next, oopt);
        log_r += mgs_orthonormalize(F);
        x = x_next;
      }
    } catch (const Error& e) {
      throw Stiffness(std::string("frame integration failed: ") + e.what());
    }
    return F;
  };

  PropagatedFrames out;
  out.Q_minus = propagate(frames.U_minus, -L, 0.0, out.log_r_minus);
  out.Q_plus = propagate(frames.S_plus, +L, 0.0, out.log_r_plus);
  return out;
}

EvansSample EvansEvaluator::evaluate(const BoundaryFrames& frames) const {
  const int n = ctx_.n();
  const Real L = profile_ ? profile_->L : 0.0;
  const Complex param = frames.param;
  const PropagatedFrames pf = propagate_frames(frames);
  const Real log_r_minus = pf.log_r_minus, log_r_plus = pf.log_r_plus;

  CMat W(2 * n, 2 * n);
  W << pf.Q_minus, pf.Q_plus;
  const Complex det = W.determinant();
  Eigen::JacobiSVD<CMat> svd(W);

  EvansSample s;
  s.param = param;
  s.scaling = frames.scaling;
  s.sigma_min = svd.singularValues().minCoeff();
  const Real mag = std::max(std::abs(det), 1e-300);
  s.log_raw = Complex(std::log(mag) + log_r_minus + log_r_plus, std::arg(det));
  const Complex eta =
      L * frames.trace_unstable_minus - L * frames.trace_stable_plus;
  s.log_value = s.log_raw - eta;
  return s;
}

EvansSample evans_value(const EvansEvaluator& ev, Complex kappa) {
  return ev(kappa, Scaling::standard);
}

EvansSample evans_inner(const EvansEvaluator& ev, Complex zeta) {
  return ev(zeta, Scaling::inner);
}

// --- Burgers reference -----------------------------------------------------

BurgersReference burgers_reference(Complex zeta_tilde, Real L0, Real ode_tol) {
  const Complex rad = 1.0 + zeta_tilde;
  if (rad.real() <= 0.0 && std::abs(rad.imag()) < 1e-14)
    throw BranchCut("1 + zeta on the branch cut");
  const Complex srt = std::sqrt(rad);

  BurgersReference out;
  out.zeta_tilde = zeta_tilde;

  auto rhs = [&](const Eigen::Vector2cd& y, Eigen::Vector2cd& dy, Real x) {
    const Real th = std::tanh(x);
    dy[0] = -2.0 * th * y[0] + y[1];
    dy[1] = zeta_tilde * y[0];
  };

  ode::Options oopt;
  oopt.abs_tol = ode_tol;
  oopt.rel_tol = ode_tol;

  auto run = [&](Real x0, Eigen::Vector2cd y, Real& log_r) {
    const Real dir = x0 > 0 ? -1.0 : 1.0;
    Real x = x0;
    while (dir * (0.0 - x) > 0) {
      const Real x_next = dir > 0 ? std::min(x + 2.0, 0.0) : std::max(x - 2.0, 0.0);
      ode::integrate(rhs, y, x, x_next, oopt);
      const Real r = y.norm();
      y /= r;
      log_r += std::log(r);
      x = x_next;
    }
    return y;
  };

  Eigen::Vector2cd ym(1.0, srt - 1.0), yp(1.0, 1.0 - srt);
  ym /= ym.norm();
  yp /= yp.norm();
  Real log_rm = 0.0, log_rp = 0.0;
  out.h_minus = run(-L0, ym, log_rm);
  out.h_plus = run(+L0, yp, log_rp);

  const Complex det = out.h_minus[0] * out.h_plus[1] - out.h_minus[1] * out.h_plus[0];
  const Real mag = std::max(std::abs(det), 1e-300);
  // both directions grow like exp((1 + Re sqrt(1+zeta)) L0)
  const Complex eta = 2.0 * L0 * (1.0 + srt);
  out.log_E0 = Complex(std::log(mag) + log_rm + log_rp, std::arg(det)) - eta;
  return out;
}

// --- eps = 0 limit bundles --------------------------------------------------

LimitBundles inner_limit_bundles(const SpectralContext& ctx, Complex zeta,
                                 Real constant_drift_tol) {
  const int n = ctx.n();
  const int ki = ctx.k_index();
  const Real g0a = ctx.gamma0() * ctx.a();
  const Mat Dg0 = ctx.Dg0();
  const Real dg_kk = Dg0(ki, ki);
  const Mat dg_under = Dg0 / dg_kk;

  LimitBundles out;
  out.zeta = zeta;
  out.zeta_tilde = dg_kk / (g0a * g0a) * zeta;

  // generalized eigenvectors of the boosted pair at the origin
  Eigen::GeneralizedSelfAdjointEigenSolver<Mat> ges(
      0.5 * (ctx.Df0() + ctx.Df0().transpose()), 0.5 * (Dg0 + Dg0.transpose()));
  const Mat r = ges.eigenvectors();

  auto assemble = [&](int side, const Eigen::Vector2cd& h) {
    CMat H(2 * n, n);
    int c = 0;
    // slow-fast column from the reference solution
    CVec sf = CVec::Zero(2 * n);
    sf[ki] = h[0];
    sf.tail(n) = ctx.gamma0() * std::abs(ctx.a()) * h[1] *
                 (dg_under.col(ki)).cast<Complex>();
    H.col(c++) = sf;
    // super-slow columns (0; Dg0 r_j / (Dg0)_kk)
    for (int j = 0; j < n; ++j) {
      const bool take = side > 0 ? j > ki : j < ki;
      if (!take) continue;
      CVec col = CVec::Zero(2 * n);
      col.tail(n) = (dg_under * r.col(j)).cast<Complex>();
      H.col(c++) = col;
    }
    // fast columns (e_j; 0)
    for (int j = 0; j < n; ++j) {
      const bool take = side > 0 ? j < ki : j > ki;
      if (!take) continue;
      CVec col = CVec::Zero(2 * n);
      col[j] = 1.0;
      H.col(c++) = col;
    }
    return H;
  };

  auto e0_of = [&](Complex z, CMat* Hm_out, CMat* Hp_out, Complex* ref_out) {
    const Complex zt = dg_kk / (g0a * g0a) * z;
    const BurgersReference ref = burgers_reference(zt);
    const CMat Hm = assemble(-1, ref.h_minus);
    const CMat Hp = assemble(+1, ref.h_plus);
    CMat W(2 * n, 2 * n);
    W << Hm, Hp;
    if (Hm_out) *Hm_out = Hm;
    if (Hp_out) *Hp_out = Hp;
    if (ref_out)
      *ref_out = ref.h_minus[0] * ref.h_plus[1] - ref.h_minus[1] * ref.h_plus[0];
    return Complex(W.determinant());
  };

  Complex ref_val;
  out.E0 = e0_of(zeta, &out.H_minus, &out.H_plus, &ref_val);
  if (std::abs(ref_val) < 1e-14) {
    out.c = Complex(0, 0);  // at the reference zero both sides vanish
  } else {
    out.c = out.E0 / ref_val;
  }

  // zeta-independence of c, probed at a second parameter value
  const Complex z2 = 0.5 * zeta + Complex(0.3, 0.4) * (1.0 + std::abs(zeta));
  Complex ref2;
  const Complex e02 = e0_of(z2, nullptr, nullptr, &ref2);
  const Complex c2 = e02 / ref2;
  if (std::abs(ref_val) > 1e-14 &&
      std::abs(c2 - out.c) > constant_drift_tol * std::max(1.0, std::abs(out.c)))
    throw ConstantDrift("extracted constant varies with zeta");
  if (std::abs(ref_val) < 1e-14) out.c = c2;
  return out;
}

// --- contour and winding ----------------------------------------------------

Contour Contour::half_annulus(Real delta, Real R, int arc_nodes, int segment_nodes) {
  if (!(delta > 0) || !(R > delta)) throw Error("need 0 < delta < R");
  Contour c;
  c.delta = delta;
  c.R = R;
  auto push = [&](Complex z) {
    if (!c.nodes.empty() && std::abs(z - c.nodes.back()) < 1e-300) return;
    c.nodes.push_back(z);
  };
  // outer arc, counterclockwise from -iR to +iR through +R
  for (int i = 0; i <= arc_nodes; ++i) {
    const Real th = -M_PI / 2 + M_PI * static_cast<Real>(i) / arc_nodes;
    push(R * std::polar(1.0, th));
  }
  // down the imaginary axis from +iR to +i delta, geometric spacing
  for (int i = 1; i <= segment_nodes; ++i) {
    const Real m = R * std::pow(delta / R, static_cast<Real>(i) / segment_nodes);
    push(Complex(0.0, m));
  }
  // indentation arc from +i delta to -i delta through +delta (clockwise
  // around the origin, keeping it outside the region)
  for (int i = 1; i <= arc_nodes; ++i) {
    const Real th = M_PI / 2 - M_PI * static_cast<Real>(i) / arc_nodes;
    push(delta * std::polar(1.0, th));
  }
  // down from -i delta to -iR
  for (int i = 1; i < segment_nodes; ++i) {
    const Real m = delta * std::pow(R / delta, static_cast<Real>(i) / segment_nodes);
    push(Complex(0.0, -m));
  }
  return c;
}

namespace {

Real wrap_pi(Real a) {
  while (a > M_PI) a -= 2 * M_PI;
  while (a <= -M_PI) a += 2 * M_PI;
  return a;
}

}  // namespace

int winding_number(const std::vector<EvansSample>& samples, Real zero_threshold_rel) {
  const size_t m = samples.size();
  if (m < 4) throw Error("too few contour samples");
  Real max_log = -std::numeric_limits<Real>::infinity();
  for (const auto& s : samples) max_log = std::max(max_log, s.log_value.real());
  for (const auto& s : samples)
    if (s.log_value.real() < max_log + std::log(zero_threshold_rel))
      throw ZeroOnContour("contour sample magnitude below the zero threshold");
  Real sum = 0.0;
  for (size_t j = 0; j < m; ++j) {
    const Real d = wrap_pi(samples[(j + 1) % m].log_value.imag() -
                           samples[j].log_value.imag());
    if (std::abs(d) >= M_PI / 2)
      throw Error("contour under-resolved: |d arg E| >= pi/2 on a segment");
    sum += d;
  }
  const Real w = sum / (2 * M_PI);
  const Real rounded = std::round(w);
  if (std::abs(w - rounded) > 0.05)
    throw Error("winding number failed the integrality check");
  return static_cast<int>(rounded);
}

namespace {

// Midpoint respecting the contour geometry: same-radius nodes refine along
// the arc, axis nodes refine geometrically in magnitude.
Complex contour_midpoint(Complex a, Complex b) {
  const Real ra = std::abs(a), rb = std::abs(b);
  if (std::abs(ra - rb) < 1e-12 * std::max(ra, rb)) {
    const Real th = std::arg(a) + 0.5 * wrap_pi(std::arg(b) - std::arg(a));
    return ra * std::polar(1.0, th);
  }
  if (std::abs(a.real()) < 1e-12 * ra && std::abs(b.real()) < 1e-12 * rb) {
    const Real m = std::sqrt(ra * rb);
    return Complex(0.0, a.imag() > 0 ? m : -m);
  }
  return 0.5 * (a + b);
}

struct ContourNode {
  Complex kappa;
  BoundaryFrames frames;
  EvansSample sample;
  bool evaluated = false;
};

void evaluate_nodes(const EvansEvaluator& ev, std::vector<ContourNode>& nodes,
                    int workers) {
  std::vector<size_t> todo;
  for (size_t i = 0; i < nodes.size(); ++i)
    if (!nodes[i].evaluated) todo.push_back(i);
  if (todo.empty()) return;
  workers = std::max(1, workers);
  std::exception_ptr error;
  std::vector<std::thread> pool;
  std::atomic<size_t> next{0};
  std::mutex err_mtx;
  auto work = [&]() {
    for (;;) {
      const size_t t = next.fetch_add(1);
      if (t >= todo.size()) return;
      try {
        ContourNode& nd = nodes[todo[t]];
        nd.sample = ev.evaluate(nd.frames);
        nd.evaluated = true;
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mtx);
        if (!error) error = std::current_exception();
        return;
      }
    }
  };
  if (workers == 1) {
    work();
  } else {
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace

ZeroCountReport count_zeros_halfplane(const EvansEvaluator& ev, Real R, Real delta,
                                      const ZeroCountOptions& opt) {
  const Real eps = ev.ctx().eps();
  if (eps <= 0) throw Error("zero counting needs a positive-eps family member");
  const Contour contour = Contour::half_annulus(delta, R, opt.arc_nodes, opt.segment_nodes);

  std::vector<ContourNode> nodes(contour.nodes.size());
  nodes[0].kappa = contour.nodes[0];
  nodes[0].frames = ev.init_frames(contour.nodes[0], Scaling::standard);
  for (size_t i = 1; i < nodes.size(); ++i) {
    nodes[i].kappa = contour.nodes[i];
    nodes[i].frames = ev.continue_frames(nodes[i - 1].frames, contour.nodes[i]);
  }
  evaluate_nodes(ev, nodes, opt.workers);

  for (int round = 0; round < opt.max_refine_rounds; ++round) {
    bool refined = false;
    std::vector<ContourNode> next;
    next.reserve(nodes.size() * 2);
    for (size_t j = 0; j < nodes.size(); ++j) {
      const size_t jn = (j + 1) % nodes.size();
      next.push_back(nodes[j]);
      const Real d = wrap_pi(nodes[jn].sample.log_value.imag() -
                             nodes[j].sample.log_value.imag());
      if (std::abs(d) >= M_PI / 2 * 0.9) {
        ContourNode mid;
        mid.kappa = contour_midpoint(nodes[j].kappa, nodes[jn].kappa);
        mid.frames = ev.continue_frames(nodes[j].frames, mid.kappa);
        next.push_back(mid);
        refined = true;
      }
    }
    nodes.swap(next);
    if (!refined) break;
    evaluate_nodes(ev, nodes, opt.workers);
    if (round + 1 == opt.max_refine_rounds)
      throw Error("contour refinement budget exhausted");
  }

  ZeroCountReport rep;
  rep.delta = delta;
  rep.R = R;
  rep.samples = static_cast<int>(nodes.size());

  std::vector<EvansSample> samples;
  samples.reserve(nodes.size());
  rep.min_sigma = std::numeric_limits<Real>::infinity();
  std::vector<Real> logs;
  for (auto& nd : nodes) {
    nd.sample.regime = regime_partition(eps, nd.kappa, opt.r0, opt.r1);
    samples.push_back(nd.sample);
    logs.push_back(nd.sample.log_value.real());
    rep.min_sigma = std::min(rep.min_sigma, nd.sample.sigma_min);
  }
  std::nth_element(logs.begin(), logs.begin() + logs.size() / 2, logs.end());
  rep.median_log_abs = logs[logs.size() / 2];
  rep.winding = winding_number(samples);
  rep.instability_detected = rep.winding > 0;

  // closure diagnostic: continue once more around to the starting node
  {
    const BoundaryFrames back = ev.continue_frames(nodes.back().frames, nodes[0].kappa);
    const Frame u0 = Frame::from_columns(nodes[0].frames.U_minus);
    const Frame u1 = Frame::from_columns(back.U_minus);
    const Frame s0 = Frame::from_columns(nodes[0].frames.S_plus);
    const Frame s1 = Frame::from_columns(back.S_plus);
    rep.closure_drift = std::max(gap_distance(u0, u1), gap_distance(s0, s1));
  }

  // value and derivative at the origin, in the inner scaling
  const Real h = opt.fd_step;
  BoundaryFrames f4 = ev.init_frames(Complex(4 * h, 0), Scaling::inner);
  const EvansSample e4 = ev.evaluate(f4);
  BoundaryFrames f2 = ev.continue_frames(f4, Complex(2 * h, 0));
  const EvansSample e2 = ev.evaluate(f2);
  BoundaryFrames f1 = ev.continue_frames(f2, Complex(h, 0));
  const EvansSample e1 = ev.evaluate(f1);
  const EvansSample e0 = ev.evaluate(ev.init_frames(Complex(0, 0), Scaling::inner));
  rep.E0 = e0.value();

  const Complex v1 = e1.value(), v2 = e2.value(), v4 = e4.value(), v0 = e0.value();
  const Complex d1 = (v1 - v0) / h, d2 = (v2 - v0) / (2 * h), d4 = (v4 - v0) / (4 * h);
  const Complex rich1 = 2.0 * d1 - d2, rich2 = 2.0 * d2 - d4;
  rep.dE0 = rich1;
  (void)rich2;

  // reference magnitude: ring of inner-scaling samples at |zeta| = delta/eps^2
  const Real ring = delta / (eps * eps);
  std::vector<Real> ring_logs;
  BoundaryFrames fr = ev.init_frames(Complex(0.0, ring), Scaling::inner);
  for (int i = 0; i <= 8; ++i) {
    const Real th = M_PI / 2 - M_PI * static_cast<Real>(i) / 8;
    const Complex z = ring * std::polar(1.0, th);
    fr = ev.continue_frames(fr, z);
    ring_logs.push_back(ev.evaluate(fr).log_value.real());
  }
  std::nth_element(ring_logs.begin(), ring_logs.begin() + ring_logs.size() / 2,
                   ring_logs.end());
  const Real ring_median = ring_logs[ring_logs.size() / 2];
  rep.e0_rel = std::exp(e0.log_value.real() - ring_median);
  return rep;
}

// --- outer regime -----------------------------------------------------------

OuterReport outer_transversality(const ModelSpec& model, Real alpha, Real beta,
                                 Complex kappa_hat, Real gap_threshold) {
  if (std::abs(std::abs(kappa_hat) - 1.0) > 1e-12)
    throw Error("kappa_hat must have unit modulus");
  const int n = model.n();
  const int ki = model.k_index();
  const Real eps = alpha * beta;

  OuterReport rep;
  rep.alpha = alpha;
  rep.beta = beta;
  rep.kappa_hat = kappa_hat;

  // family data (or the eps = 0 limit)
  std::optional<FenichelData> fen;
  std::optional<SlowManifold> slow;
  Real gamma0, a_coeff, mu_k0;
  {
    const Vec zero = Vec::Zero(n);
    mu_k0 = eigen_fields(model, zero).mu[ki];
    gamma0 = lorentz_gamma(mu_k0);
    a_coeff =
        0.5 * (model.d2_kk(model.f(), ki, ki) - mu_k0 * model.d2_kk(model.g(), ki, ki));
  }
  if (eps > 0) {
    ShockFamily fam = build_shock_family(model, {eps});
    fen.emplace(model, fam, eps);
    slow = compute_slow_manifold(*fen);
  }
  const SpectralContext ctx = eps > 0
                                  ? SpectralContext(model, [&] {
                                      ShockFamily f;
                                      f.mu_k0 = mu_k0;
                                      f.eps_values = {eps};
                                      f.triples = {fen->triple()};
                                      return f;
                                    }(), eps)
                                  : SpectralContext::limit(model, mu_k0);

  auto slow_matrix = [&](Real tau) {
    CMat M = CMat::Zero(n + 1, n + 1);
    Vec v = Vec::Zero(n);
    if (eps > 0) v = eps * slow->u_at(tau);
    const Mat Df = ctx.Df_eps(v);
    const Mat Dg = ctx.Dg_eps(v);
    M(0, 0) = beta > 0 ? Complex(Df(ki, ki) / beta, 0.0)
                       : Complex(2.0 * gamma0 * a_coeff * alpha * tau, 0.0);
    M(0, 1 + ki) = 1.0;
    for (int j = 0; j < n; ++j)
      M(1 + j, 0) = kappa_hat * Dg(j, ki) +
                    (j == ki ? beta * beta * kappa_hat * kappa_hat : Complex(0, 0));
    return M;
  };
  auto h_of = [&](Real tau) {
    return eps > 0 ? slow->h_at(tau) : gamma0 * std::abs(a_coeff);
  };

  auto direction = [&](const CMat& M, bool unstable) {
    Eigen::ComplexEigenSolver<CMat> es(M);
    int best = 0;
    for (int i = 1; i < es.eigenvalues().size(); ++i) {
      const Real re = es.eigenvalues()[i].real();
      const Real rb = es.eigenvalues()[best].real();
      if (unstable ? re > rb : re < rb) best = i;
    }
    return std::make_pair(Complex(es.eigenvalues()[best]),
                          CVec(es.eigenvectors().col(best)));
  };

  const Real eta = 1e-3;
  auto [mu_sf, line0] = direction(slow_matrix(-1.0 + eta), true);
  rep.mu_sf = mu_sf;

  if (alpha == 0.0) {
    // frozen slow flow: the line is stationary
    auto [ls, vs] = direction(slow_matrix(-1.0 + eta), false);
    auto [lu_r, vu_r] = direction(slow_matrix(1.0 - eta), true);
    Frame lf = Frame::from_columns(line0);
    rep.min_gap = gap_distance(lf, Frame::from_columns(vs));
    rep.terminal_gap = gap_distance(lf, Frame::from_columns(vu_r));
    if (rep.min_gap < gap_threshold) throw GapCollapse("line meets the stable direction");
    return rep;
  }

  // integrate the line along the slow flow in tau
  CVec F = line0;
  Real min_gap = std::numeric_limits<Real>::infinity();
  const int steps = 400;
  ode::Options oopt;
  oopt.abs_tol = 1e-11;
  oopt.rel_tol = 1e-11;
  Real tau = -1.0 + eta;
  const Real tau_end = 1.0 - eta;
  auto rhs = [&](const CVec& y, CVec& dy, Real t) {
    const Real speed = alpha * (1.0 - t * t) * h_of(t);
    dy = slow_matrix(t) * y / speed;
  };
  for (int i = 0; i < steps; ++i) {
    const Real t_next = -1.0 + eta + (tau_end - (-1.0 + eta)) * (i + 1.0) / steps;
    ode::integrate(rhs, F, tau, t_next, oopt);
    F /= F.norm();
    tau = t_next;
    auto [ls, vs] = direction(slow_matrix(tau), false);
    min_gap = std::min(min_gap,
                       gap_distance(Frame::from_columns(F), Frame::from_columns(vs)));
  }
  auto [lu, vu] = direction(slow_matrix(1.0 - eta), true);
  rep.min_gap = min_gap;
  rep.terminal_gap = gap_distance(Frame::from_columns(F), Frame::from_columns(vu));
  if (rep.min_gap < gap_threshold)
    throw GapCollapse("transported line approaches the stable direction");
  return rep;
}

// --- outmost regime ---------------------------------------------------------

OutmostBlockDiag outmost_block_diagonalize(const SpectralContext& ctx,
                                           const SlowManifold* slow, Complex kappa,
                                           Real tau, Real contour_radius) {
  if (kappa.real() < 0) throw Error("need Re kappa >= 0");
  const int n = ctx.n();
  const Real eps = ctx.eps();

  auto B_blocks = [&](Real t) {
    Vec v = Vec::Zero(n);
    if (eps > 0) {
      if (slow == nullptr) throw Error("tau-location requires a slow manifold");
      v = eps * slow->u_at(t);
    }
    const Mat Df = ctx.Df_eps(v), Dg = ctx.Dg_eps(v);
    return std::make_pair(Mat(0.5 * (Df + Dg)), Mat(0.5 * (Df - Dg)));
  };

  auto R_at = [&](Real t) {
    auto [Bgt, Blt] = B_blocks(t);
    CMat N(2 * n, 2 * n);
    N.topLeftCorner(n, n) = Bgt.cast<Complex>();
    N.topRightCorner(n, n) = Bgt.cast<Complex>();
    N.bottomLeftCorner(n, n) = Blt.cast<Complex>();
    N.bottomRightCorner(n, n) = Blt.cast<Complex>();
    const Complex lam_end = 1.0 / kappa;
    auto proj = [&](Real s) {
      const Complex lam = s * lam_end;
      CMat B = CMat::Zero(2 * n, 2 * n);
      B.topLeftCorner(n, n) = CMat::Identity(n, n);
      B.bottomRightCorner(n, n) = -CMat::Identity(n, n);
      B += lam * N;
      // eigenvalues must stay clear of the two contours
      Eigen::ComplexEigenSolver<CMat> es(B, false);
      for (int i = 0; i < es.eigenvalues().size(); ++i) {
        const Real dp = std::abs(std::abs(es.eigenvalues()[i] - Complex(1, 0)) -
                                 contour_radius);
        const Real dm = std::abs(std::abs(es.eigenvalues()[i] + Complex(1, 0)) -
                                 contour_radius);
        if (std::min(dp, dm) < 0.05)
          throw EigenvalueGroupCollision("eigenvalue near the separating contour");
      }
      std::vector<CMat> P(2);
      P[0] = dunford_taylor_projector(B, Complex(1, 0), contour_radius);
      P[1] = dunford_taylor_projector(B, Complex(-1, 0), contour_radius);
      return P;
    };
    KatoOptions kopt;
    kopt.substeps = 8;
    const ProjectorPath path = kato_transport(proj, Vec::LinSpaced(17, 0.0, 1.0), kopt);
    return path.transformations.back();
  };

  OutmostBlockDiag out;
  out.R = R_at(tau);

  // kappa-form of the coefficient matrix and its blocks
  auto [Bgt, Blt] = B_blocks(tau);
  CMat At(2 * n, 2 * n);
  At.topLeftCorner(n, n) = kappa * CMat::Identity(n, n) + Bgt.cast<Complex>();
  At.topRightCorner(n, n) = Bgt.cast<Complex>();
  At.bottomLeftCorner(n, n) = Blt.cast<Complex>();
  At.bottomRightCorner(n, n) = -kappa * CMat::Identity(n, n) + Blt.cast<Complex>();

  const CMat M = out.R.partialPivLu().solve(At * out.R);
  out.A_gt = M.topLeftCorner(n, n);
  out.A_lt = M.bottomRightCorner(n, n);
  out.offdiag_residual =
      std::max(M.topRightCorner(n, n).norm(), M.bottomLeftCorner(n, n).norm()) /
      std::max(1.0, M.norm());

  auto herm_min = [](const CMat& A) {
    Eigen::SelfAdjointEigenSolver<CMat> es(0.5 * (A + A.adjoint()));
    return es.eigenvalues().minCoeff();
  };
  auto herm_max = [](const CMat& A) {
    Eigen::SelfAdjointEigenSolver<CMat> es(0.5 * (A + A.adjoint()));
    return es.eigenvalues().maxCoeff();
  };
  out.margin_gt = herm_min(out.A_gt);
  out.margin_lt = -herm_max(out.A_lt);

  // eps = 0 reference margins of the raw blocks
  const Mat Bgt0 = 0.5 * (ctx.Df0() + ctx.Dg0());
  const Mat Blt0 = 0.5 * (ctx.Df0() - ctx.Dg0());
  out.margin_gt_0 = Eigen::SelfAdjointEigenSolver<Mat>(0.5 * (Bgt0 + Bgt0.transpose()))
                        .eigenvalues()
                        .minCoeff();
  out.margin_lt_0 = -Eigen::SelfAdjointEigenSolver<Mat>(0.5 * (Blt0 + Blt0.transpose()))
                         .eigenvalues()
                         .maxCoeff();
  if (out.margin_gt < 0.5 * out.margin_gt_0 || out.margin_lt < 0.5 * out.margin_lt_0)
    throw MarginLoss("block definiteness margins below half the eps = 0 margins");

  // derivative bound |R(tau=0)^{-1} d_tau R|
  if (eps > 0) {
    const Real ht = 1e-4;
    const CMat R0 = std::abs(tau) < 1e-14 ? out.R : R_at(0.0);
    const CMat dR = (R_at(std::min(tau + ht, 1.0)) - R_at(std::max(tau - ht, -1.0))) /
                    (std::min(tau + ht, 1.0) - std::max(tau - ht, -1.0));
    out.deriv_bound = (R0.partialPivLu().solve(dR)).norm();
  } else {
    out.deriv_bound = 0.0;
  }
  return out;
}

}  // namespace evansflow
