// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <vector>

#include "evansflow/types.hpp"

namespace evansflow {

// Orthonormal (unitary-column) representative of a subspace of C^d.
class Frame {
 public:
  Frame() = default;
  // Orthonormalizes the given spanning columns.
  static Frame from_columns(const CMat& cols);
  // Columns already orthonormal within tol.
  static Frame from_orthonormal(const CMat& cols, Real tol = 1e-10);

  int ambient() const { return static_cast<int>(cols_.rows()); }
  int dim() const { return static_cast<int>(cols_.cols()); }
  const CMat& columns() const { return cols_; }
  CMat projector() const { return cols_ * cols_.adjoint(); }

 private:
  explicit Frame(CMat cols) : cols_(std::move(cols)) {}
  CMat cols_;
};

// Modified Gram-Schmidt with positive-real diagonal; returns log det R.
Real mgs_orthonormalize(CMat& F);

Real gap_distance(const Frame& X, const Frame& Y);

// Chart coordinate T for span M_B [I; T]; blockwise Riccati field.
CMat riccati_field(const CMat& A_B, const CMat& T);

struct GrassmannFlowOptions {
  Real abs_tol = 1e-12;
  Real rel_tol = 1e-12;
  Real renorm_interval = 1.0;
  Real chart_cond_limit = 1e6;
};

struct GrassmannTrajectory {
  std::vector<Real> x;
  std::vector<Frame> frames;
};

// Propagates span X0 under xi' = A(x) xi by frame integration with periodic
// re-orthonormalization; checkpoints fixed by the caller.
GrassmannTrajectory integrate_grassmann_flow(
    const std::function<CMat(Real)>& A_of_x, const Frame& X0,
    const std::vector<Real>& checkpoints, const GrassmannFlowOptions& opt = {});

// Same trajectory integrated in Riccati charts with chart switching; used to
// cross-validate the frame strategy.
GrassmannTrajectory integrate_riccati_charts(
    const std::function<CMat(Real)>& A_of_x, const Frame& X0,
    const std::vector<Real>& checkpoints, const GrassmannFlowOptions& opt = {});

enum class EquilibriumTag { attractor, saddle, repeller, degenerate };

struct EquilibriumReport {
  EquilibriumTag tag = EquilibriumTag::degenerate;
  Real c_x = 0.0;  // definiteness margin of the invariant block
  Real c_y = 0.0;  // definiteness margin of the complementary block
  Real attractor_margin = 0.0;  // c_x + c_y
  Real repeller_margin = 0.0;
};

EquilibriumReport classify_equilibrium(const CMat& A, const Frame& X,
                                       Real invariance_tol = 1e-8,
                                       Real margin_tol = 1e-9);

// Dunford-Taylor projector onto the eigenvalue group of M enclosed by the
// circle; trapezoidal quadrature on the circle.
CMat dunford_taylor_projector(const CMat& M, Complex center, Real radius,
                              int quad_points = 32);

// Separating circle for the selected eigenvalue group, with a quadrature
// count matched to the annulus ratio.
struct GroupCircle {
  Complex center{0, 0};
  Real radius = 0.0;
  int quad_points = 32;
  Real gap = 0.0;
};
GroupCircle fit_group_circle(const std::vector<Complex>& inside,
                             const std::vector<Complex>& outside,
                             Real scale = 1.0);

// Projector onto the eigenvalue group selected by the predicate, with an
// automatically fitted separating circle. gap_out reports the annulus margin.
CMat spectral_projector(const CMat& M, const std::function<bool(Complex)>& select,
                        Real* gap_out = nullptr, int quad_points = 32);

struct KatoOptions {
  Real fd_step = 1e-5;      // relative to the node scale
  int substeps = 8;         // RK4 substeps per node interval
  Real intertwine_tol = 1e-8;
};

struct ProjectorPath {
  Vec params;
  std::vector<std::vector<CMat>> projectors;  // per node, per group
  std::vector<CMat> transformations;          // S(param), S(start) = I
  Real max_intertwine_residual = 0.0;
  Real max_projector_residual = 0.0;  // max ||P^2 - P||
};

// Kato transport S' = (sum_i P_i' P_i) S along a 1-D projector family.
ProjectorPath kato_transport(
    const std::function<std::vector<CMat>(Real)>& projectors_of_t, const Vec& nodes,
    const KatoOptions& opt = {},
    const std::function<std::vector<CMat>(Real)>& derivatives_of_t = nullptr);

}  // namespace evansflow
