#include "rmtlab/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rmtlab::spectral {

DataMatrix ingest(Eigen::MatrixXcd raw, std::string atom_name, std::uint64_t seed) {
  DataMatrix m;
  m.atom_name = std::move(atom_name);
  m.seed = seed;
  if (raw.rows() > raw.cols()) {
    m.entries = raw.transpose();
    m.transposed = true;
  } else {
    m.entries = std::move(raw);
  }
  return m;
}

DataMatrix generate_matrix(int p, int n, const atoms::AtomDistribution& dist,
                           std::uint64_t seed) {
  if (p < 1 || n < 1) throw std::invalid_argument("generate_matrix: dimensions must be >= 1");
  Rng rng(seed);
  Eigen::MatrixXcd raw(p, n);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < n; ++j) raw(i, j) = dist.sample(rng);
  return ingest(std::move(raw), dist.name(), seed);
}

Eigen::MatrixXcd covariance(const DataMatrix& m) {
  return (m.entries.adjoint() * m.entries) / static_cast<double>(m.n());
}

Eigen::MatrixXcd companion_covariance(const DataMatrix& m) {
  return (m.entries * m.entries.adjoint()) / static_cast<double>(m.n());
}

SpectralDecomposition svd_full(const DataMatrix& m) {
  const double n = m.n();
  linalg::Svd s = linalg::svd(m.entries);
  SpectralDecomposition d;
  d.sigma = std::move(s.sigma);
  d.left = std::move(s.left);
  d.right = std::move(s.right);
  d.lambda.resize(d.sigma.size());
  for (long i = 0; i < d.sigma.size(); ++i) d.lambda[i] = d.sigma[i] * d.sigma[i] / n;

  const double scale = std::max(d.sigma[d.sigma.size() - 1], 1e-300);
  double worst = 0.0;
  for (long i = 0; i < d.sigma.size(); ++i) {
    const double r1 = (m.entries * d.right.col(i) - d.sigma[i] * d.left.col(i)).norm();
    const double r2 = (m.entries.adjoint() * d.left.col(i) - d.sigma[i] * d.right.col(i)).norm();
    worst = std::max({worst, r1, r2});
  }
  d.residual = worst / scale;
  return d;
}

Eigen::VectorXd singular_values(const DataMatrix& m) { return linalg::singular_values(m.entries); }

Eigen::VectorXd covariance_eigenvalues(const DataMatrix& m) {
  Eigen::VectorXd lam = linalg::hermitian_eigenvalues(companion_covariance(m));
  for (long i = 0; i < lam.size(); ++i) lam[i] = std::max(lam[i], 0.0);
  return lam;
}

Eigen::MatrixXcd augment(const DataMatrix& m) {
  const int p = m.p(), n = m.n();
  Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(p + n, p + n);
  a.topRightCorner(p, n) = m.entries;
  a.bottomLeftCorner(n, p) = m.entries.adjoint();
  return a;
}

namespace {

Eigen::MatrixXcd drop_row(const Eigen::MatrixXcd& a, long r) {
  Eigen::MatrixXcd out(a.rows() - 1, a.cols());
  out.topRows(r) = a.topRows(r);
  out.bottomRows(a.rows() - 1 - r) = a.bottomRows(a.rows() - 1 - r);
  return out;
}

Eigen::MatrixXcd drop_col(const Eigen::MatrixXcd& a, long c) {
  Eigen::MatrixXcd out(a.rows(), a.cols() - 1);
  out.leftCols(c) = a.leftCols(c);
  out.rightCols(a.cols() - 1 - c) = a.rightCols(a.cols() - 1 - c);
  return out;
}

// sigma_i(full) <= sigma_i(minor) <= sigma_{i+1}(full) for a row-deleted
// minor, ascending indexing, i = 1..p-1.
double row_deletion_violation(const Eigen::VectorXd& full, const Eigen::VectorXd& minor) {
  double v = 0.0;
  for (long i = 0; i < minor.size(); ++i) {
    v = std::max(v, full[i] - minor[i]);
    v = std::max(v, minor[i] - full[i + 1]);
  }
  return v;
}

// sigma_{i-1}(full) <= sigma_i(minor) <= sigma_i(full) for a column-deleted
// minor (p < n), ascending indexing, sigma_0 := 0.
double col_deletion_violation(const Eigen::VectorXd& full, const Eigen::VectorXd& minor) {
  double v = 0.0;
  for (long i = 0; i < full.size(); ++i) {
    const double lower = (i == 0) ? 0.0 : full[i - 1];
    v = std::max(v, lower - minor[i]);
    v = std::max(v, minor[i] - full[i]);
  }
  return v;
}

}  // namespace

InterlaceReport interlace_check(const DataMatrix& m) {
  const Eigen::VectorXd full = linalg::singular_values(m.entries);
  InterlaceReport rep;

  if (m.p() > 1) {
    for (int r = 0; r < m.p(); ++r) {
      const Eigen::VectorXd minor = linalg::singular_values(drop_row(m.entries, r));
      rep.max_row_violation = std::max(rep.max_row_violation, row_deletion_violation(full, minor));
    }
  }
  for (int c = 0; c < m.n(); ++c) {
    const Eigen::VectorXd minor = linalg::singular_values(drop_col(m.entries, c));
    if (m.p() < m.n()) {
      rep.max_col_violation = std::max(rep.max_col_violation, col_deletion_violation(full, minor));
    } else {
      // p = n: the deleted-column minor is a row-deleted minor of M^T.
      rep.max_col_violation = std::max(rep.max_col_violation, row_deletion_violation(full, minor));
    }
  }
  rep.max_violation = std::max(rep.max_row_violation, rep.max_col_violation);
  return rep;
}

double interlace_check_hermitian(const Eigen::MatrixXcd& a) {
  const long n = a.rows();
  if (n < 2) return 0.0;
  const Eigen::VectorXd full = linalg::hermitian_eigenvalues(a);
  const Eigen::VectorXd minor = linalg::hermitian_eigenvalues(a.topLeftCorner(n - 1, n - 1));
  double v = 0.0;
  for (long i = 0; i < n - 1; ++i) {
    v = std::max(v, full[i] - minor[i]);
    v = std::max(v, minor[i] - full[i + 1]);
  }
  return v;
}

std::pair<double, double> weyl_distance(const DataMatrix& m, const DataMatrix& n) {
  if (m.p() != n.p() || m.n() != n.n())
    throw std::invalid_argument("weyl_distance: shape mismatch");
  const Eigen::VectorXd sm = linalg::singular_values(m.entries);
  const Eigen::VectorXd sn = linalg::singular_values(n.entries);
  const double gap = (sm - sn).cwiseAbs().maxCoeff();
  const double opnorm = linalg::operator_norm(m.entries - n.entries);
  return {gap, opnorm};
}

namespace {

void require_simple(const Eigen::VectorXd& values, double target, double tol,
                    const char* what, bool exclude_exact_index, long index) {
  for (long j = 0; j < values.size(); ++j) {
    if (exclude_exact_index && j == index) continue;
    if (std::abs(values[j] - target) < tol)
      throw std::domain_error(std::string(what) + ": spectrum degenerate near the requested value");
  }
}

}  // namespace

CoordinateCheck eigvec_coordinate_identity(const Eigen::MatrixXcd& a, int i) {
  const long n = a.rows();
  if (n < 2) throw std::invalid_argument("eigvec_coordinate_identity: need n >= 2");
  if (i < 0 || i >= n) throw std::invalid_argument("eigvec_coordinate_identity: index range");

  const auto [lam, vecs] = linalg::hermitian_eigensystem(a);
  const double scale = std::max(1.0, std::max(std::abs(lam[0]), std::abs(lam[n - 1])));
  const double tol = 1e-12 * scale;
  require_simple(lam, lam[i], tol, "eigvec_coordinate_identity", true, i);

  const Eigen::MatrixXcd minor = a.topLeftCorner(n - 1, n - 1);
  const auto [mlam, mvecs] = linalg::hermitian_eigensystem(minor);
  require_simple(mlam, lam[i], tol, "eigvec_coordinate_identity", false, -1);

  const Eigen::VectorXcd x = a.topRightCorner(n - 1, 1);
  double denom = 1.0;
  for (long j = 0; j < n - 1; ++j) {
    const double diff = mlam[j] - lam[i];
    denom += std::norm(mvecs.col(j).dot(x)) / (diff * diff);
  }

  CoordinateCheck c;
  c.measured = std::norm(vecs(n - 1, i));
  c.formula = 1.0 / denom;
  return c;
}

CoordinateCheck singvec_coordinate_identity(const DataMatrix& m, int i, Side side) {
  const int p = m.p(), n = m.n();
  if (i < 0 || i >= p) throw std::invalid_argument("singvec_coordinate_identity: index range");
  if (side == Side::LastColumn && n < 2)
    throw std::invalid_argument("singvec_coordinate_identity: need n >= 2");
  if (side == Side::LastRow && p < 1)
    throw std::invalid_argument("singvec_coordinate_identity: need p >= 1");

  const linalg::Svd full = linalg::svd(m.entries);
  const double scale = std::max(full.sigma[full.sigma.size() - 1], 1.0);
  const double tol = 1e-12 * scale;
  require_simple(full.sigma, full.sigma[i], tol, "singvec_coordinate_identity", true, i);

  CoordinateCheck c;
  if (side == Side::LastColumn) {
    // M = [M' X]; x is the last coordinate of the right singular vector.
    const Eigen::MatrixXcd mp = m.entries.leftCols(n - 1);
    const Eigen::VectorXcd x = m.entries.col(n - 1);
    const linalg::Svd minor = linalg::svd(mp);
    require_simple(minor.sigma, full.sigma[i], tol, "singvec_coordinate_identity", false, -1);
    const double s2 = full.sigma[i] * full.sigma[i];
    double denom = 1.0;
    for (long j = 0; j < minor.sigma.size(); ++j) {
      const double t2 = minor.sigma[j] * minor.sigma[j];
      denom += t2 / ((t2 - s2) * (t2 - s2)) * std::norm(minor.left.col(j).dot(x));
    }
    c.measured = std::norm(full.right(n - 1, i));
    c.formula = 1.0 / denom;
  } else {
    // M = [M'; Y*]; y is the last coordinate of the left singular vector.
    if (p == 1) {
      // The minor has no rows: the formula's sum is empty and |y|^2 = 1.
      c.measured = std::norm(full.left(0, i));
      c.formula = 1.0;
      return c;
    }
    const Eigen::MatrixXcd mp = m.entries.topRows(p - 1);
    const Eigen::VectorXcd y = m.entries.row(p - 1).adjoint();
    const linalg::Svd minor = linalg::svd(mp);
    require_simple(minor.sigma, full.sigma[i], tol, "singvec_coordinate_identity", false, -1);
    const double s2 = full.sigma[i] * full.sigma[i];
    double denom = 1.0;
    for (long j = 0; j < minor.sigma.size(); ++j) {
      const double t2 = minor.sigma[j] * minor.sigma[j];
      denom += t2 / ((t2 - s2) * (t2 - s2)) * std::norm(minor.right.col(j).dot(y));
    }
    c.measured = std::norm(full.left(p - 1, i));
    c.formula = 1.0 / denom;
  }
  return c;
}

std::pair<Complex, Complex> stieltjes_pair(const Eigen::MatrixXcd& w, Complex z) {
  const long n = w.rows();
  if (n < 1 || w.rows() != w.cols()) throw std::invalid_argument("stieltjes_pair: square input");

  const Eigen::VectorXd lam = linalg::hermitian_eigenvalues(w);
  for (long i = 0; i < n; ++i)
    if (std::abs(Complex(lam[i], 0) - z) < 1e-12)
      throw std::domain_error("stieltjes_pair: z within 1e-12 of the spectrum");

  Complex emp(0, 0);
  for (long i = 0; i < n; ++i) emp += 1.0 / (Complex(lam[i], 0) - z);
  emp /= static_cast<double>(n);

  Complex schur(0, 0);
  for (long k = 0; k < n; ++k) {
    Eigen::MatrixXcd wk(n - 1, n - 1);
    Eigen::VectorXcd ak(n - 1);
    long r = 0;
    for (long i = 0; i < n; ++i) {
      if (i == k) continue;
      ak[r] = w(i, k);
      long c = 0;
      for (long j = 0; j < n; ++j) {
        if (j == k) continue;
        wk(r, c) = w(i, j);
        ++c;
      }
      ++r;
    }
    wk.diagonal().array() -= z;
    const Eigen::VectorXcd sol = wk.partialPivLu().solve(ak);
    schur += 1.0 / (w(k, k) - z - ak.dot(sol));
  }
  schur /= static_cast<double>(n);
  return {emp, schur};
}

std::vector<double> project_distance(const Eigen::MatrixXcd& basis,
                                     const atoms::AtomDistribution& dist, int trials, Rng& rng) {
  const long n = basis.rows(), d = basis.cols();
  if (trials < 1) throw std::invalid_argument("project_distance: trials must be >= 1");
  if (d > 0) {
    const double ortho_err =
        (basis.adjoint() * basis - Eigen::MatrixXcd::Identity(d, d)).cwiseAbs().maxCoeff();
    if (ortho_err > 1e-10)
      throw std::invalid_argument("project_distance: basis columns are not orthonormal");
  }
  std::vector<double> out(static_cast<std::size_t>(trials));
  Eigen::VectorXcd x(n);
  for (int t = 0; t < trials; ++t) {
    for (long i = 0; i < n; ++i) x[i] = dist.sample(rng);
    out[static_cast<std::size_t>(t)] = (d == 0) ? 0.0 : (basis.adjoint() * x).norm();
  }
  return out;
}

}  // namespace rmtlab::spectral
