#include "saddlenet/spectral.hpp"

#include <Eigen/Eigenvalues>

#include <sstream>

namespace saddlenet {

Matrix HessianSplit::reconstruct() const {
  return v_nonneg * lambda_nonneg.asDiagonal() * v_nonneg.transpose() +
         v_neg * lambda_neg.asDiagonal() * v_neg.transpose();
}

Matrix HessianSplit::negative_projector() const {
  return v_neg * v_neg.transpose();
}

HessianSplit hessian_split(const Matrix& h) {
  if (h.rows() != h.cols()) throw ValidationError("hessian_split: matrix not square");
  const double asym = h.size() ? (h - h.transpose()).cwiseAbs().maxCoeff() : 0.0;
  if (asym > kSymmetryTolerance) {
    std::ostringstream os;
    os << "hessian_split: asymmetry " << asym << " exceeds " << kSymmetryTolerance;
    throw ValidationError(os.str());
  }
  const Matrix sym = 0.5 * (h + h.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sym);
  const Vector& lambda = eig.eigenvalues();  // ascending
  const Matrix& v = eig.eigenvectors();
  Eigen::Index n_neg = 0;
  while (n_neg < lambda.size() && lambda(n_neg) < -kZeroEigenvalueTolerance) ++n_neg;
  const Eigen::Index n_pos = lambda.size() - n_neg;

  HessianSplit split;
  split.v_neg = v.leftCols(n_neg);
  split.lambda_neg = lambda.head(n_neg);
  split.v_nonneg = v.rightCols(n_pos);
  split.lambda_nonneg = lambda.tail(n_pos);
  return split;
}

double lambda_min(const Matrix& symmetric) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(symmetric, Eigen::EigenvaluesOnly);
  return eig.eigenvalues()(0);
}

double lambda_max(const Matrix& symmetric) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(symmetric, Eigen::EigenvaluesOnly);
  return eig.eigenvalues()(eig.eigenvalues().size() - 1);
}

}  // namespace saddlenet
