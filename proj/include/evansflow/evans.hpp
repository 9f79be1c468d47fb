// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "evansflow/grassmann.hpp"
#include "evansflow/spectral.hpp"

namespace evansflow {

enum class Regime { inner, outer, outmost };
const char* regime_name(Regime r);
Regime regime_partition(Real eps, Complex kappa, Real r0, Real r1);

struct EvansOptions {
  Real ode_abs_tol = 1e-13;
  Real ode_rel_tol = 1e-10;
  Real renorm_max_growth = 3.0;  // renormalize after this much log-growth
  int kato_substeps = 4;
  int quad_points = 32;
  Real center_tol = 1e-9;
};

// Analytic boundary bases of the decaying-solution spaces: U^- spans the
// unstable space of the left endpoint matrix, S^+ the stable space of the
// right one. Bases are holomorphic along continuation paths, not orthonormal.
struct BoundaryFrames {
  Complex param;  // kappa (standard scaling) or zeta (inner scaling)
  Scaling scaling = Scaling::standard;
  CMat U_minus, S_plus;
  Complex trace_unstable_minus{0, 0};  // sum of unstable eigenvalues of A^-
  Complex trace_stable_plus{0, 0};     // sum of stable eigenvalues of A^+
};

struct EvansSample {
  Complex param;
  Scaling scaling = Scaling::standard;
  Complex log_raw{0, 0};   // log of the Wronskian with truncation at +-L
  Complex log_value{0, 0}; // boundary-growth normalized; Re = ln|E|, Im = arg E
  Real sigma_min = 0.0;    // smallest singular value of the frame junction
  Regime regime = Regime::outer;

  Complex value() const { return std::exp(log_value); }
};

class EvansEvaluator {
 public:
  EvansEvaluator(SpectralContext ctx, const ProfileGrid* profile,
                 EvansOptions opt = {});

  const SpectralContext& ctx() const { return ctx_; }
  const EvansOptions& options() const { return opt_; }

  // Frames from a plain eigensolve with deterministic ordering; throws
  // SplittingLost outside the consistent-splitting region. At zeta = 0 in the
  // inner scaling the degenerate groups are split by first-order perturbation
  // in zeta.
  BoundaryFrames init_frames(Complex param, Scaling scaling) const;

  // Holomorphic continuation of the bases along the straight segment to
  // `to`, via the transformation ODE driven by resolvent projectors.
  BoundaryFrames continue_frames(const BoundaryFrames& from, Complex to) const;

  // Frames continued along a piecewise-straight path from path.front() to
  // path.back(); the start frames come from init_frames.
  BoundaryFrames init_frames_path(const std::vector<Complex>& path,
                                  Scaling scaling) const;

  struct PropagatedFrames {
    CMat Q_minus, Q_plus;  // orthonormal frames at x = 0
    Real log_r_minus = 0.0, log_r_plus = 0.0;
  };
  // Integrates both boundary frames along the profile to x = 0.
  PropagatedFrames propagate_frames(const BoundaryFrames& frames) const;

  // Integrates both sides along the profile and assembles the determinant.
  EvansSample evaluate(const BoundaryFrames& frames) const;

  EvansSample operator()(Complex param, Scaling scaling) const {
    return evaluate(init_frames(param, scaling));
  }

  CMat endpoint_matrix(int side, Complex param, Scaling scaling) const;

 private:
  SpectralContext ctx_;
  const ProfileGrid* profile_;
  EvansOptions opt_;
};

EvansSample evans_value(const EvansEvaluator& ev, Complex kappa);
EvansSample evans_inner(const EvansEvaluator& ev, Complex zeta);

// --- Burgers reference problem -------------------------------------------

struct BurgersReference {
  Complex zeta_tilde;
  Eigen::Vector2cd h_minus, h_plus;  // values at x = 0
  Complex log_E0;                    // log of det(h^-, h^+), growth-normalized
  Complex E0() const { return std::exp(log_E0); }
};

BurgersReference burgers_reference(Complex zeta_tilde, Real L0 = 40.0,
                                   Real ode_tol = 1e-12);

// --- eps = 0 limit bundles -------------------------------------------------

struct LimitBundles {
  Complex zeta, zeta_tilde;
  CMat H_minus, H_plus;  // structured 2n x n bases
  Complex E0;            // det [H^- | H^+]
  Complex c;             // E0 = c * reference value, zeta-independent
};

LimitBundles inner_limit_bundles(const SpectralContext& ctx, Complex zeta,
                                 Real constant_drift_tol = 1e-6);

// --- contours and zero counting -------------------------------------------

struct Contour {
  std::vector<Complex> nodes;  // ordered, closed (last connects to first)
  bool closed = true;
  Real delta = 0.0, R = 0.0;

  // Boundary of {kappa in H+ : delta <= |kappa| <= R} with a right-side
  // semicircular indentation around the origin, counterclockwise.
  static Contour half_annulus(Real delta, Real R, int arc_nodes = 32,
                              int segment_nodes = 24);
};

int winding_number(const std::vector<EvansSample>& samples,
                   Real zero_threshold_rel = 1e-12);

struct ZeroCountOptions {
  Real r0 = 1.0, r1 = 0.25;
  int arc_nodes = 32, segment_nodes = 24;
  int max_refine_rounds = 12;
  Real fd_step = 0.02;   // zeta step for the derivative at the origin
  int workers = 1;
};

struct ZeroCountReport {
  int winding = 0;
  Complex E0{0, 0};
  Complex dE0{0, 0};
  Real delta = 0.0, R = 0.0;
  Real median_log_abs = 0.0;  // median of ln|E| over the contour
  Real e0_rel = 0.0;          // |E0| / median contour magnitude
  Real min_sigma = 0.0;
  Real closure_drift = 0.0;   // frame mismatch after the closed loop
  int samples = 0;
  bool instability_detected = false;
};

ZeroCountReport count_zeros_halfplane(const EvansEvaluator& ev, Real R, Real delta,
                                      const ZeroCountOptions& opt = {});

// --- outer and outmost regimes --------------------------------------------

struct OuterReport {
  Real alpha = 0.0, beta = 0.0;
  Complex kappa_hat{1, 0};
  Complex mu_sf{0, 0};     // slow-fast unstable eigenvalue at tau = -1
  Real min_gap = 1.0;      // min over tau of gap(line, stable direction)
  Real terminal_gap = 1.0; // gap(line, unstable direction) at tau = +1
};

OuterReport outer_transversality(const ModelSpec& model, Real alpha, Real beta,
                                 Complex kappa_hat, Real gap_threshold = 1e-6);

struct OutmostBlockDiag {
  CMat R, A_gt, A_lt;
  Real offdiag_residual = 0.0;
  Real margin_gt = 0.0, margin_lt = 0.0;    // definiteness margins of the blocks
  Real margin_gt_0 = 0.0, margin_lt_0 = 0.0;  // eps = 0 reference margins
  Real deriv_bound = 0.0;  // |R(tau=0)^{-1} d_tau R(tau)|
};

OutmostBlockDiag outmost_block_diagonalize(const SpectralContext& ctx,
                                           const SlowManifold* slow, Complex kappa,
                                           Real tau, Real contour_radius = 0.5);

}  // namespace evansflow
