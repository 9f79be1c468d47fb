// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <complex>
#include <stdexcept>
#include <string>

namespace evansflow {

using Real = double;
using Complex = std::complex<double>;
using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;

constexpr int kMaxDim = 8;

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

#define EVANSFLOW_ERROR(Name)              \
  struct Name : Error {                    \
    using Error::Error;                    \
  }

// model
EVANSFLOW_ERROR(NonSymmetricFlux);
EVANSFLOW_ERROR(DegenerateMetric);
EVANSFLOW_ERROR(EigenvalueCollision);
EVANSFLOW_ERROR(NotDiagonalizable);
EVANSFLOW_ERROR(GNLViolation);
EVANSFLOW_ERROR(SuperluminalSpeed);
EVANSFLOW_ERROR(SplittingInvalid);
// shock
EVANSFLOW_ERROR(NewtonDivergence);
EVANSFLOW_ERROR(NonUniqueHugoniotPoint);
EVANSFLOW_ERROR(MarginalShock);
EVANSFLOW_ERROR(FamilyInvariantViolation);
// profile
EVANSFLOW_ERROR(SlowManifoldDivergence);
EVANSFLOW_ERROR(EndpointMiss);
// spectral
EVANSFLOW_ERROR(ScalingMismatch);
EVANSFLOW_ERROR(CenterEigenvalue);
EVANSFLOW_ERROR(SKViolation);
EVANSFLOW_ERROR(GroupAssignmentAmbiguous);
// grassmann
EVANSFLOW_ERROR(DimensionMismatch);
EVANSFLOW_ERROR(ChartExhaustion);
EVANSFLOW_ERROR(NotInvariant);
EVANSFLOW_ERROR(EigenvalueGroupCollision);
// evans
EVANSFLOW_ERROR(SplittingLost);
EVANSFLOW_ERROR(Stiffness);
EVANSFLOW_ERROR(BranchCut);
EVANSFLOW_ERROR(ConstantDrift);
EVANSFLOW_ERROR(ZeroOnContour);
EVANSFLOW_ERROR(GapCollapse);
EVANSFLOW_ERROR(MarginLoss);
// cli
EVANSFLOW_ERROR(ConfigError);

#undef EVANSFLOW_ERROR

}  // namespace evansflow
