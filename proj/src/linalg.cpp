#include "rmtlab/linalg.hpp"

#include <cstdlib>
#include <stdexcept>

#define LAPACK_COMPLEX_CPP
#include <complex>
#include <lapacke.h>

namespace rmtlab::linalg {

namespace {

// BLAS threading is capped before first use: trials are parallelized at the
// harness level, and a fixed BLAS thread count keeps reductions bit-stable.
const bool kBlasEnvReady = [] {
  setenv("OPENBLAS_NUM_THREADS", "1", /*overwrite=*/0);
  return true;
}();

bool is_real(const Eigen::MatrixXcd& a) {
  return a.imag().cwiseAbs().maxCoeff() == 0.0;
}

void check_info(int info, const char* routine) {
  if (info != 0)
    throw std::runtime_error(std::string(routine) + " failed to converge, info=" +
                             std::to_string(info));
}

Eigen::VectorXd eig_values_real(Eigen::MatrixXd a) {
  const int n = static_cast<int>(a.rows());
  Eigen::VectorXd w(n);
  check_info(LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'N', 'L', n, a.data(), n, w.data()), "dsyevd");
  return w;
}

std::pair<Eigen::VectorXd, Eigen::MatrixXd> eig_system_real(Eigen::MatrixXd a) {
  const int n = static_cast<int>(a.rows());
  Eigen::VectorXd w(n);
  check_info(LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'V', 'L', n, a.data(), n, w.data()), "dsyevd");
  return {std::move(w), std::move(a)};
}

}  // namespace

Eigen::VectorXd hermitian_eigenvalues(const Eigen::MatrixXcd& a) {
  if (a.rows() != a.cols()) throw std::invalid_argument("hermitian_eigenvalues: square input");
  if (a.rows() == 0) return {};
  if (is_real(a)) return eig_values_real(a.real());
  Eigen::MatrixXcd work = a;
  const int n = static_cast<int>(a.rows());
  Eigen::VectorXd w(n);
  check_info(LAPACKE_zheevd(LAPACK_COL_MAJOR, 'N', 'L', n,
                            reinterpret_cast<lapack_complex_double*>(work.data()), n, w.data()),
             "zheevd");
  return w;
}

std::pair<Eigen::VectorXd, Eigen::MatrixXcd> hermitian_eigensystem(const Eigen::MatrixXcd& a) {
  if (a.rows() != a.cols()) throw std::invalid_argument("hermitian_eigensystem: square input");
  if (a.rows() == 0) return {};
  if (is_real(a)) {
    auto [w, v] = eig_system_real(a.real());
    return {std::move(w), v.cast<std::complex<double>>()};
  }
  Eigen::MatrixXcd work = a;
  const int n = static_cast<int>(a.rows());
  Eigen::VectorXd w(n);
  check_info(LAPACKE_zheevd(LAPACK_COL_MAJOR, 'V', 'L', n,
                            reinterpret_cast<lapack_complex_double*>(work.data()), n, w.data()),
             "zheevd");
  return {std::move(w), std::move(work)};
}

namespace {

// Largest-magnitude coordinate of each right vector made real positive; the
// left vector carries the same phase so a u = sigma v keeps its sign
// structure.
void fix_phases(Svd& s) {
  for (long i = 0; i < s.sigma.size(); ++i) {
    long arg = 0;
    s.right.col(i).cwiseAbs().maxCoeff(&arg);
    const std::complex<double> c = s.right(arg, i);
    if (std::abs(c) > 0.0) {
      const std::complex<double> phase = std::conj(c) / std::abs(c);
      s.right.col(i) *= phase;
      s.left.col(i) *= phase;
    }
  }
}

Svd svd_tall_free(const Eigen::MatrixXcd& a);

}  // namespace

Svd svd(const Eigen::MatrixXcd& a) {
  Svd s = svd_tall_free(a);
  fix_phases(s);
  return s;
}

namespace {

Svd svd_tall_free(const Eigen::MatrixXcd& a) {
  const long rows = a.rows(), cols = a.cols();
  if (rows == 0 || cols == 0) throw std::invalid_argument("svd: empty matrix");
  if (rows > cols) {
    // Work with the adjoint and swap the roles of the vector systems.
    Svd t = svd_tall_free(a.adjoint());
    return {std::move(t.sigma), std::move(t.right), std::move(t.left)};
  }

  const long k = rows;
  auto [lam, vecs] = hermitian_eigensystem(a * a.adjoint());
  Svd out;
  out.sigma.resize(k);
  out.left = std::move(vecs);
  out.right.resize(cols, k);
  const double top = std::sqrt(std::max(lam[k - 1], 0.0));
  std::vector<long> null_columns;
  for (long i = 0; i < k; ++i) {
    out.sigma[i] = std::sqrt(std::max(lam[i], 0.0));
    Eigen::VectorXcd u = a.adjoint() * out.left.col(i);
    const double norm = u.norm();
    if (norm > top * 1e-12 && norm > 0.0) {
      out.right.col(i) = u / norm;
    } else {
      out.right.col(i).setZero();
      null_columns.push_back(i);
    }
  }
  if (!null_columns.empty()) {
    // Right vectors for (near-)zero singular values: any orthonormal
    // completion inside ker(a) serves.
    Eigen::MatrixXcd good(cols, k - static_cast<long>(null_columns.size()));
    long g = 0;
    for (long i = 0; i < k; ++i)
      if (out.right.col(i).norm() > 0.5) good.col(g++) = out.right.col(i);
    Eigen::MatrixXcd q = Eigen::HouseholderQR<Eigen::MatrixXcd>(good).householderQ();
    for (std::size_t j = 0; j < null_columns.size(); ++j)
      out.right.col(null_columns[j]) = q.col(g + static_cast<long>(j));
  }
  return out;
}

}  // namespace

Eigen::VectorXd singular_values(const Eigen::MatrixXcd& a) {
  const Eigen::MatrixXcd gram =
      (a.rows() <= a.cols()) ? Eigen::MatrixXcd(a * a.adjoint()) : Eigen::MatrixXcd(a.adjoint() * a);
  Eigen::VectorXd lam = hermitian_eigenvalues(gram);
  for (long i = 0; i < lam.size(); ++i) lam[i] = std::sqrt(std::max(lam[i], 0.0));
  return lam;
}

double operator_norm(const Eigen::MatrixXcd& a) {
  if (a.rows() == 0 || a.cols() == 0) return 0.0;
  const Eigen::VectorXd s = singular_values(a);
  return s[s.size() - 1];
}

}  // namespace rmtlab::linalg
