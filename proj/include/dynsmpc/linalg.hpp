#pragma once

#include <Eigen/Dense>

namespace dynsmpc {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Largest eigenvalue modulus.
double spectral_radius(const Matrix& M);

bool is_symmetric(const Matrix& M, double tol = 1e-10);

// True iff M is symmetric and its smallest eigenvalue exceeds tol * max(1, |M|).
bool is_positive_definite(const Matrix& M, double tol = 1e-12);

// Symmetric positive semidefinite square root L = V diag(sqrt(max(lambda, 0))) V^T,
// so that L * L = M for symmetric PSD M.
Matrix symmetric_sqrt(const Matrix& M);

}  // namespace dynsmpc
