#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rmtlab/mp.hpp"
#include "rmtlab/spectral.hpp"

namespace rmtlab::stats {

// Nontrivial spectrum of a covariance matrix, ascending.
struct SpectrumSample {
  Eigen::VectorXd lambda;  // eigenvalues of W, ascending
  Eigen::VectorXd sigma;   // sqrt(n * lambda)
  int n = 0;
  int p = 0;
  double y = 0.0;          // exact p / n of this sample
  std::string atom_name;
  std::uint64_t seed = 0;
};

SpectrumSample make_sample(const spectral::DataMatrix& m);

// Bulk index window: ceil(eps * p) <= i <= floor((1 - eps) * p), one-based.
// Empty when eps * p rounds past its mirror.
struct BulkIndices {
  int lo = 0;  // one-based, inclusive
  int hi = -1;
  bool empty() const { return lo > hi; }
};
BulkIndices bulk_indices(int p, double eps);

int count_interval(const SpectrumSample& s, double lo, double hi);

struct ConcentrationResult {
  int count = 0;
  double expected = 0.0;  // p * integral of the MP density over I
  double deviation = 0.0;
  double ratio = 0.0;     // deviation / p
};
// Requires I inside the bulk window [a + eps, b - eps].
ConcentrationResult concentration_test(const SpectrumSample& s, double lo, double hi,
                                       const mp::MPModel& model, double eps);

struct BulkContainment {
  bool contained = false;
  double margin = 0.0;  // largest eps' with a + eps' <= lambda_i <= b - eps'
};
// Vacuously contained with an infinite margin when the bulk window is empty.
BulkContainment bulk_containment(const SpectrumSample& s, double eps);

struct DelocalizationStat {
  double sup_coordinate = 0.0;  // max coordinate magnitude over bulk u_i and v_i
  double normalized = 0.0;      // sup_coordinate * sqrt(n)
  int vectors_in_window = 0;
};
// Empty-window sentinel: vectors_in_window = 0 and NaN statistics.
DelocalizationStat delocalization_stat(const spectral::SpectralDecomposition& d,
                                       const mp::MPModel& model, double eps, int n);

inline constexpr double kInfiniteGap = std::numeric_limits<double>::infinity();

struct RegularizedGapRequest {
  int i0 = 0;  // one-based index into the ascending sigma of the row minor
  int l = 1;
  int p = 0;   // rows of the minor M_{p,n}; 0 means all rows
};

struct RegularizedGapValue {
  int i0 = 0;
  int l = 0;
  int p = 0;
  double c1 = 0.0;
  double value = 0.0;
};

struct GapReport {
  double eps = 0.0;
  double c = 0.0;
  double min_bulk_gap = 0.0;
  bool gap_property_holds = false;   // min_bulk_gap >= n^{-1-c}
  double threshold = 0.0;            // n^{-1-c}
  std::vector<int> q_indices;
  std::vector<double> q_values;      // kInfiniteGap on repeated singular values
  std::vector<RegularizedGapValue> regularized;
};

// Bulk gap statistics of W plus the inverse-square separation functional Q_i
// and the window-regularized gap of the row minors.
GapReport gap_report(const spectral::DataMatrix& m, double eps, double c, double c1,
                     const std::vector<int>& q_indices,
                     const std::vector<RegularizedGapRequest>& regularized = {});

// Q_i from an ascending sigma list (one-based index); infinity sentinel when
// sigma_i is repeated within 1e-12 * sigma_max.
double q_statistic(const Eigen::VectorXd& sigma, int n, int i);

double sine_kernel(double x, double y);

// det(K(alpha_i, alpha_j)) over a k-tuple of rescaled coordinates.
double sine_det_prediction(std::span<const double> alpha);

struct BinGrid {
  double lo = -3.0;
  double hi = 3.0;
  int count = 24;

  double width() const { return (hi - lo) / count; }
  double center(int i) const { return lo + (i + 0.5) * width(); }
};

// Rescaled k-point correlation estimate around energy u. Coordinates are
// alpha = n rho(u) (lambda - u). k = 1 bins alpha itself; k = 2 bins the gap
// alpha_2 - alpha_1 over ordered pairs whose anchor lies in
// [-ref_halfwidth, ref_halfwidth]; k = 3 bins (alpha_2 - alpha_1,
// alpha_3 - alpha_1) on the same grid per axis (row-major flattening).
struct CorrelationEstimate {
  int k = 1;
  double u = 0.0;
  double eps = 0.0;  // energy half-window of the averaged variant
  double ref_halfwidth = 0.0;
  BinGrid grid;
  std::vector<double> center;     // bin centers (first axis)
  std::vector<double> center2;    // second axis centers (k = 3 only)
  std::vector<double> estimate;   // density-normalized counts
  std::vector<double> std_error;
  long trials = 0;
};

CorrelationEstimate kpoint_correlation(const std::vector<SpectrumSample>& samples, int k,
                                       double u, const BinGrid& grid,
                                       double ref_halfwidth = 4.0);

// Eq.-style window average over u' in [u - eps, u + eps] (midpoint rule).
CorrelationEstimate averaged_correlation(const std::vector<SpectrumSample>& samples, int k,
                                         double u, double eps, const BinGrid& grid,
                                         double ref_halfwidth = 4.0, int energy_nodes = 11);

// det(K) prediction at the bin centers of an estimate, averaged over each bin.
std::vector<double> sine_prediction_for(const CorrelationEstimate& est, int bin_nodes = 8);

// Smooth test function G(x) = prod_j exp(-(x_j - mu_j)^2 / (2 w^2)) with an
// analytic sup bound certificate for derivative orders 0..5 (max mixed
// partial magnitude).
class TestFunction {
 public:
  TestFunction(std::vector<double> centers, double width);

  int arity() const { return static_cast<int>(centers_.size()); }
  double width() const { return width_; }
  const std::vector<double>& centers() const { return centers_; }

  double operator()(std::span<const double> x) const;
  double derivative_bound(int order) const;  // orders 0..5

 private:
  std::vector<double> centers_;
  double width_;
  std::array<double, 6> factor_bounds_{};  // sup |g^(m)| of one factor
};

struct FourMomentResult {
  double mean_a = 0.0;
  double mean_b = 0.0;
  double se_a = 0.0;
  double se_b = 0.0;
  double delta = 0.0;     // |mean_a - mean_b|
  double se_delta = 0.0;  // combined standard error
};

// Monte Carlo contrast of E G(n lambda_{i_1}, ..., n lambda_{i_k}) between two
// ensembles; rows of the sample matrices are trials, columns the k scaled
// eigenvalues.
FourMomentResult four_moment_compare(const Eigen::MatrixXd& samples_a,
                                     const Eigen::MatrixXd& samples_b, const TestFunction& g);

// Max over a sliding grid of bulk intervals I (|I| >= log^2 n / n) of
// N_I / (n |I|).
double eigen_upper_check(const SpectrumSample& s, const mp::MPModel& model, double eps);

}  // namespace rmtlab::stats
