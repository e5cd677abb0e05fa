#pragma once

#include "saddlenet/types.hpp"

namespace saddlenet {

// Eigenpairs of a symmetric matrix split by sign. Eigenvalues within
// kZeroEigenvalueTolerance of zero land in the nonnegative block.
struct HessianSplit {
  Matrix v_nonneg;
  Vector lambda_nonneg;
  Matrix v_neg;
  Vector lambda_neg;

  Matrix reconstruct() const;
  // Orthogonal projector onto span(v_neg).
  Matrix negative_projector() const;
};

inline constexpr double kZeroEigenvalueTolerance = 1e-10;
inline constexpr double kSymmetryTolerance = 1e-10;

// Throws ValidationError when h is not symmetric within kSymmetryTolerance.
HessianSplit hessian_split(const Matrix& h);

double lambda_min(const Matrix& symmetric);
double lambda_max(const Matrix& symmetric);

}  // namespace saddlenet
