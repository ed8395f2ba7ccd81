#pragma once

#include <complex>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "rmtlab/rng.hpp"

namespace rmtlab::atoms {

using Complex = std::complex<double>;

// Triangular table of mixed moments E Re(z)^m Im(z)^l for m + l <= order.
class MomentTable {
 public:
  explicit MomentTable(int order);

  int order() const { return order_; }
  double at(int m, int l) const;
  void set(int m, int l, double value);

 private:
  int order_;
  std::vector<double> entries_;
};

// A mean-zero, unit-E|z|^2 entry distribution. Values are immutable after
// construction; sampling is pure given an explicit random stream, so a
// distribution can be shared read-only across parallel trials.
class AtomDistribution {
 public:
  enum class Kind { Discrete, RealGaussian, ComplexGaussian, GaussDivisible, Truncated };

  // Finite support law. Probabilities must be nonnegative and sum to 1
  // within 1e-12; the law must have mean 0 and E|z|^2 = 1 within 1e-10.
  static AtomDistribution discrete(std::vector<Complex> support, std::vector<double> probs,
                                   std::string name = "discrete");

  static AtomDistribution real_gaussian();
  static AtomDistribution complex_gaussian();

  // Fixed catalog laws.
  static AtomDistribution rademacher();
  static AtomDistribution complex_bernoulli();
  // {-sqrt(3), 0, sqrt(3)} w.p. {1/6, 2/3, 1/6}: matches the real gaussian to order 4.
  static AtomDistribution three_point();
  // Independent Re/Im copies of three_point()/sqrt(2): matches the complex
  // gaussian to order 4.
  static AtomDistribution complex_three_point();
  // Leptokurtic complex law (component fourth moment 3/2 vs the gaussian's
  // 3/4). Matches the complex gaussian to order 3 but not 4, and admits an
  // exact order-4 gauss-divisible partner (heavy_gauss_partner).
  static AtomDistribution heavy_three_point();
  // t = 1/2 gauss-divisible law matching heavy_three_point() to order 4.
  static AtomDistribution heavy_gauss_partner();

  Kind kind() const { return kind_; }
  bool is_real() const { return is_real_; }
  const std::string& name() const { return name_; }

  // Parameters of composite kinds (meaningful per kind()).
  double mixing_weight() const { return t_; }
  double truncation_radius() const { return trunc_radius_; }
  Complex truncation_shift() const { return trunc_shift_; }
  double truncation_rescale() const { return trunc_scale_; }
  const AtomDistribution& base() const;

  const std::vector<Complex>& support() const { return support_; }
  const std::vector<double>& probs() const { return probs_; }

  // Largest attainable |z| for almost-surely bounded laws; nullopt otherwise.
  std::optional<double> support_radius() const;

  Complex sample(Rng& rng) const;

  // Exact E Re(z)^m Im(z)^l. Throws std::invalid_argument for negative
  // orders and std::runtime_error for unsupported kind/order combinations.
  double mixed_moment(int m, int l) const;

  MomentTable moments(int order) const;

 private:
  AtomDistribution() = default;
  friend AtomDistribution gauss_divisible_mix(const AtomDistribution&, double);
  friend AtomDistribution truncate_standardize(const AtomDistribution&, double);

  double conditioned_raw_moment(int m, int l) const;  // Truncated kind only

  Kind kind_ = Kind::Discrete;
  bool is_real_ = true;
  std::string name_;
  std::vector<Complex> support_;
  std::vector<double> probs_;
  std::vector<double> cumulative_;
  double t_ = 0.0;  // gauss-divisible mixing weight
  std::shared_ptr<const AtomDistribution> base_;
  double trunc_radius_ = 0.0;
  Complex trunc_shift_{0.0, 0.0};
  double trunc_scale_ = 1.0;
  double trunc_accept_ = 1.0;  // P(|base| <= K)
};

inline Complex sample_atom(const AtomDistribution& dist, Rng& rng) { return dist.sample(rng); }

inline double mixed_moment(const AtomDistribution& dist, int m, int l) {
  return dist.mixed_moment(m, l);
}

struct MatchReport {
  bool matched = false;
  int worst_m = 0;
  int worst_l = 0;
  double discrepancy = 0.0;  // largest |moment difference| over m + l <= k
};

// True iff all mixed moments with m + l <= k agree within tol.
MatchReport match_order(const AtomDistribution& a, const AtomDistribution& b, int k,
                        double tol = 1e-9);

// Law of (1-t)^{1/2} z' + t^{1/2} z'' with z'' a standard (real or complex,
// per the base's realness) gaussian. t must lie in (0, 1]; t = 1 collapses
// to the pure gaussian. Nested mixtures are flattened.
AtomDistribution gauss_divisible_mix(const AtomDistribution& base, double t);

// Base conditioned on |z| <= K, recentered to mean 0 and rescaled to
// E|z|^2 = 1. Requires K >= 3 and P(|z| <= K) >= 1/2. All realizable values
// of the result satisfy |z| <= 2K.
AtomDistribution truncate_standardize(const AtomDistribution& dist, double K);

// Raised by solve_third_order_match when the constrained search fails.
class MatchSolveError : public std::runtime_error {
 public:
  MatchSolveError(const std::string& what, double best_residual)
      : std::runtime_error(what), best_residual_(best_residual) {}
  double best_residual() const { return best_residual_; }

 private:
  double best_residual_;
};

struct ThirdOrderSolution {
  AtomDistribution law;     // discrete, <= 4 support points
  double residual = 0.0;    // worst moment discrepancy, m + l <= 3
  double support_radius = 0.0;
};

// Finds a bounded discrete law matching the target to third order within
// 1e-9. The target must have mean 0 and E|z|^2 = 1.
ThirdOrderSolution solve_third_order_match(const MomentTable& target);

// Named catalog: fixed laws plus "gauss-divisible:t=T:base=NAME" and
// "truncated:K=R:base=NAME" combinators.
AtomDistribution from_name(std::string_view name);
std::vector<std::string> catalog_names();

}  // namespace rmtlab::atoms
