#pragma once

#include <complex>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "rmtlab/atoms.hpp"
#include "rmtlab/linalg.hpp"
#include "rmtlab/rng.hpp"

namespace rmtlab::spectral {

using Complex = std::complex<double>;

// p x n data matrix with p <= n; inputs with more rows than columns are
// transposed at ingestion (the nontrivial spectrum is unchanged).
struct DataMatrix {
  Eigen::MatrixXcd entries;
  bool transposed = false;
  std::string atom_name;
  std::uint64_t seed = 0;

  int p() const { return static_cast<int>(entries.rows()); }
  int n() const { return static_cast<int>(entries.cols()); }
  double aspect_ratio() const { return static_cast<double>(p()) / n(); }
};

DataMatrix ingest(Eigen::MatrixXcd raw, std::string atom_name = "", std::uint64_t seed = 0);

// iid entries drawn row by row; bit-reproducible for a fixed seed.
DataMatrix generate_matrix(int p, int n, const atoms::AtomDistribution& dist, std::uint64_t seed);

// W = M^* M / n (n x n) and its p x p companion M M^* / n, which carries the
// nontrivial eigenvalues.
Eigen::MatrixXcd covariance(const DataMatrix& m);
Eigen::MatrixXcd companion_covariance(const DataMatrix& m);

// Coupled singular system: M u_i = sigma_i v_i and M^* v_i = sigma_i u_i,
// ascending, with lambda_i = sigma_i^2 / n.
struct SpectralDecomposition {
  Eigen::VectorXd sigma;
  Eigen::VectorXd lambda;
  Eigen::MatrixXcd right;  // u_i in C^n, columns
  Eigen::MatrixXcd left;   // v_i in C^p, columns
  double residual = 0.0;   // max_i max(|M u - s v|, |M* v - s u|) / |M|_op
};

SpectralDecomposition svd_full(const DataMatrix& m);

Eigen::VectorXd singular_values(const DataMatrix& m);       // ascending
Eigen::VectorXd covariance_eigenvalues(const DataMatrix& m);  // lambda ascending

// Hermitian block matrix [[0, M], [M^*, 0]]; spectrum {+-sigma_i} plus n - p zeros.
Eigen::MatrixXcd augment(const DataMatrix& m);

struct InterlaceReport {
  double max_row_violation = 0.0;  // deleting a row of M
  double max_col_violation = 0.0;  // deleting a column of M
  double max_violation = 0.0;
};

// Verifies the interlacing inequalities on every row- and column-deleted
// minor of M.
InterlaceReport interlace_check(const DataMatrix& m);

// Hermitian interlacing on the leading principal minor; returns max violation.
double interlace_check_hermitian(const Eigen::MatrixXcd& a);

// (max_i |sigma_i(M) - sigma_i(N)|, |M - N|_op); first <= second.
std::pair<double, double> weyl_distance(const DataMatrix& m, const DataMatrix& n);

struct CoordinateCheck {
  double measured = 0.0;
  double formula = 0.0;
};

// |last coordinate|^2 of the i-th eigenvector of a Hermitian matrix versus
// the minor-based formula. i is zero-based into the ascending spectrum.
CoordinateCheck eigvec_coordinate_identity(const Eigen::MatrixXcd& a, int i);

enum class Side { LastColumn, LastRow };

// Same check for singular vectors: last coordinate of the right (LastColumn)
// or left (LastRow) singular vector against the minor formula.
CoordinateCheck singvec_coordinate_identity(const DataMatrix& m, int i, Side side);

// Empirical Stieltjes transform of a Hermitian matrix at z next to the same
// quantity assembled from Schur complements of row/column deletions.
std::pair<Complex, Complex> stieltjes_pair(const Eigen::MatrixXcd& w, Complex z);

// Samples of |pi_H X| for X with iid entries from dist and H spanned by the
// orthonormal columns of basis.
std::vector<double> project_distance(const Eigen::MatrixXcd& basis,
                                     const atoms::AtomDistribution& dist, int trials, Rng& rng);

}  // namespace rmtlab::spectral
