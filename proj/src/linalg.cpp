#include "dynsmpc/linalg.hpp"

#include <algorithm>
#include <cmath>

namespace dynsmpc {

double spectral_radius(const Matrix& M) {
  if (M.size() == 0) return 0.0;
  Eigen::EigenSolver<Matrix> es(M, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

bool is_symmetric(const Matrix& M, double tol) {
  if (M.rows() != M.cols()) return false;
  const double scale = std::max(1.0, M.cwiseAbs().maxCoeff());
  return (M - M.transpose()).cwiseAbs().maxCoeff() <= tol * scale;
}

bool is_positive_definite(const Matrix& M, double tol) {
  if (M.rows() == 0 || !is_symmetric(M) || !M.allFinite()) return false;
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (M + M.transpose()), Eigen::EigenvaluesOnly);
  const double scale = std::max(1.0, M.cwiseAbs().maxCoeff());
  return es.eigenvalues().minCoeff() > tol * scale;
}

Matrix symmetric_sqrt(const Matrix& M) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (M + M.transpose()));
  Vector root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  const Matrix& V = es.eigenvectors();
  return V * root.asDiagonal() * V.transpose();
}

}  // namespace dynsmpc
