#pragma once

#include <Eigen/Dense>
#include <utility>

namespace rmtlab::linalg {

// Hermitian eigensolvers backed by LAPACK (zheevd/dsyevd; the real-symmetric
// path is taken automatically when the matrix has no imaginary part).
// Eigenvalues are ascending. Throws std::runtime_error on LAPACK failure.
Eigen::VectorXd hermitian_eigenvalues(const Eigen::MatrixXcd& a);
std::pair<Eigen::VectorXd, Eigen::MatrixXcd> hermitian_eigensystem(const Eigen::MatrixXcd& a);

// Thin singular value decomposition a = left * diag(sigma) * right^*,
// with sigma ascending and min(rows, cols) coupled vector pairs. Computed
// through the gram matrix of the smaller side. Each right vector's
// largest-magnitude coordinate is normalized to be real positive.
struct Svd {
  Eigen::VectorXd sigma;   // ascending, size min(rows, cols)
  Eigen::MatrixXcd left;   // rows x k
  Eigen::MatrixXcd right;  // cols x k
};
Svd svd(const Eigen::MatrixXcd& a);

Eigen::VectorXd singular_values(const Eigen::MatrixXcd& a);  // ascending

double operator_norm(const Eigen::MatrixXcd& a);

}  // namespace rmtlab::linalg
