#include <doctest.h>

#include <array>
#include <cmath>
#include <numbers>
#include <vector>

#include "rmtlab/harness.hpp"
#include "rmtlab/stats.hpp"

using namespace rmtlab;

namespace {

stats::SpectrumSample synthetic_sample(std::vector<double> lambda, int n) {
  stats::SpectrumSample s;
  s.p = static_cast<int>(lambda.size());
  s.n = n;
  s.y = static_cast<double>(s.p) / n;
  s.lambda = Eigen::Map<Eigen::VectorXd>(lambda.data(), static_cast<long>(lambda.size()));
  s.sigma.resize(s.lambda.size());
  for (long i = 0; i < s.lambda.size(); ++i) s.sigma[i] = std::sqrt(n * s.lambda[i]);
  return s;
}

stats::SpectrumSample quantile_sample(int p) {
  std::vector<double> lam(static_cast<std::size_t>(p));
  for (int i = 0; i < p; ++i)
    lam[static_cast<std::size_t>(i)] = mp::mp_quantile((i + 1.0) / (p + 1.0), 1.0);
  return synthetic_sample(std::move(lam), p);
}

std::vector<stats::SpectrumSample> wishart_samples(int p, int n, long trials,
                                                   std::uint64_t master) {
  const auto dist = atoms::AtomDistribution::complex_gaussian();
  std::vector<stats::SpectrumSample> out(static_cast<std::size_t>(trials));
  harness::parallel_trials(trials, [&](long t) {
    const auto m = spectral::generate_matrix(p, n, dist, derive_seed(master, t));
    out[static_cast<std::size_t>(t)] = stats::make_sample(m);
  });
  return out;
}

}  // namespace

TEST_CASE("count_interval: basics and set properties") {
  const auto s = synthetic_sample({1.0, 2.0, 3.0}, 3);
  CHECK(stats::count_interval(s, 5.0, 6.0) == 0);
  CHECK(stats::count_interval(s, 1.5, 2.5) == 1);
  CHECK_THROWS_AS(stats::count_interval(s, 2.0, 1.0), std::invalid_argument);

  // Additive over disjoint intervals, monotone under inclusion.
  const auto q = quantile_sample(200);
  const int left = stats::count_interval(q, 0.0, 1.0);
  const int right = stats::count_interval(q, 1.0000000001, 4.0);
  CHECK(left + right == stats::count_interval(q, 0.0, 4.0));
  CHECK(stats::count_interval(q, 0.5, 1.5) <= stats::count_interval(q, 0.25, 1.75));
}

TEST_CASE("concentration: degenerate interval and quantile spectrum") {
  const mp::MPModel model(1.0);
  const auto q = quantile_sample(500);
  const auto deg = stats::concentration_test(q, 1.5, 1.5, model, 0.1);
  CHECK(deg.count == 0);
  CHECK(deg.deviation == doctest::Approx(0.0).epsilon(1e-12));

  const auto r = stats::concentration_test(q, 1.0, 2.0, model, 0.1);
  CHECK(r.ratio < 0.01);  // quantiles track the law by construction

  CHECK_THROWS_AS(stats::concentration_test(q, 0.0, 2.0, model, 0.1), std::invalid_argument);
}

TEST_CASE("bulk containment: quantiles, vacuous window") {
  const auto q = quantile_sample(300);
  const auto r = stats::bulk_containment(q, 0.1);
  CHECK(r.contained);
  CHECK(r.margin > 0.0);

  const auto vac = stats::bulk_containment(q, 0.5);
  CHECK(vac.contained);
  CHECK(std::isinf(vac.margin));
}

TEST_CASE("delocalization statistic: dimension one and localized matrices") {
  const mp::MPModel model(1.0);

  spectral::DataMatrix one{Eigen::MatrixXcd::Constant(1, 1, 1.2)};
  const auto d1 = spectral::svd_full(one);
  const auto s1 = stats::delocalization_stat(d1, model, 0.1, 1);
  CHECK(s1.vectors_in_window == 1);
  CHECK(s1.normalized == doctest::Approx(1.0));

  // Diagonal (fully localized) matrix with bulk eigenvalues: the statistic
  // saturates at sqrt(n).
  Eigen::MatrixXcd diag = Eigen::MatrixXcd::Zero(4, 4);
  const std::array<double, 4> lams{1.0, 1.5, 2.0, 2.5};
  for (int i = 0; i < 4; ++i) diag(i, i) = std::sqrt(4.0 * lams[static_cast<std::size_t>(i)]);
  const auto d4 = spectral::svd_full(spectral::DataMatrix{diag});
  const auto s4 = stats::delocalization_stat(d4, model, 0.3, 4);
  CHECK(s4.vectors_in_window == 4);
  CHECK(s4.sup_coordinate == doctest::Approx(1.0));
  CHECK(s4.normalized == doctest::Approx(2.0));

  // Empty window sentinel: no eigenvalue inside [a + eps, b - eps].
  const auto none = stats::delocalization_stat(d4, model, 2.1, 4);
  CHECK(none.vectors_in_window == 0);
  CHECK(std::isnan(none.sup_coordinate));
}

TEST_CASE("Q statistic: frozen direct sum, infinity sentinel, monotonicity") {
  Eigen::VectorXd sigma(4);
  sigma << 1.0, 2.0, 3.0, 4.0;
  // (1/4) [ (1 + 1 + 1/4) + 0 + (1/9 + 1/16 + 1/25 + 1/36) ]
  const double expected = (2.25 + (1.0 / 9 + 1.0 / 16 + 1.0 / 25 + 1.0 / 36)) / 4.0;
  CHECK(stats::q_statistic(sigma, 4, 2) == doctest::Approx(expected).epsilon(1e-14));

  Eigen::VectorXd rep(2);
  rep << 2.0, 2.0;
  CHECK(std::isinf(stats::q_statistic(rep, 2, 1)));

  // Doubling every sigma quarters Q.
  CHECK(stats::q_statistic(2.0 * sigma, 4, 2) == doctest::Approx(expected / 4.0).epsilon(1e-12));

  // Spreading neighbors away from sigma_2 decreases Q.
  Eigen::VectorXd spread(4);
  spread << 0.5, 2.0, 3.5, 4.5;
  CHECK(stats::q_statistic(spread, 4, 2) < expected);
}

TEST_CASE("gap report: synthetic spectra") {
  // M = diag(1, 2, 4): lambdas are {1/3, 4/3, 16/3}.
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(3, 3);
  m(0, 0) = 1.0;
  m(1, 1) = 2.0;
  m(2, 2) = 4.0;
  const spectral::DataMatrix dm{m};

  std::vector<stats::RegularizedGapRequest> reqs{{2, 1, 3}};
  const auto rep = stats::gap_report(dm, 0.2, 0.5, 10.0, {2}, reqs);

  CHECK(rep.threshold == doctest::Approx(std::pow(3.0, -1.5)));
  CHECK(rep.min_bulk_gap == doctest::Approx(4.0 / 3.0 - 1.0 / 3.0));
  CHECK(rep.gap_property_holds);

  // Exhaustive oracle over the two admissible pairs (1,2) and (1,3),
  // N0 = 6, exponent log(6)^0.9, cap log(6)^10.
  const double n0 = 6.0;
  const double expnt = std::pow(std::log(n0), 0.9);
  const double cap = std::pow(std::log(n0), 10.0);
  const double g12 = std::sqrt(n0) * (2.0 - 1.0) / std::pow(std::min(1.0, cap), expnt);
  const double g13 = std::sqrt(n0) * (4.0 - 1.0) / std::pow(std::min(2.0, cap), expnt);
  CHECK(rep.regularized.size() == 1);
  CHECK(rep.regularized[0].value == doctest::Approx(std::min(g12, g13)).epsilon(1e-14));

  // Q with a repeated singular value hits the sentinel.
  Eigen::MatrixXcd twin = Eigen::MatrixXcd::Zero(2, 2);
  twin(0, 0) = 2.0;
  twin(1, 1) = 2.0;
  const auto rep2 = stats::gap_report(spectral::DataMatrix{twin}, 0.2, 0.5, 10.0, {1});
  CHECK(std::isinf(rep2.q_values[0]));
}

TEST_CASE("regularized gap is nondecreasing in the window length l") {
  // The admissible (i_-, i_+) pairs shrink as l grows, so the infimum can
  // only go up. Verified exhaustively on a synthetic spectrum.
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(6, 6);
  const std::array<double, 6> sig{0.5, 1.1, 1.3, 2.0, 3.1, 4.0};
  for (int i = 0; i < 6; ++i) m(i, i) = sig[static_cast<std::size_t>(i)];
  const spectral::DataMatrix dm{m};

  double prev = -1.0;
  for (int l = 1; l <= 4; ++l) {
    const auto rep =
        stats::gap_report(dm, 0.1, 0.5, 10.0, {}, {stats::RegularizedGapRequest{5, l, 6}});
    CHECK(rep.regularized[0].value >= prev);
    prev = rep.regularized[0].value;
  }
}

TEST_CASE("sine kernel and determinant predictions") {
  CHECK(stats::sine_kernel(0.7, 0.7) == 1.0);
  CHECK(stats::sine_kernel(0.0, 1.0) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(stats::sine_kernel(0.0, 0.5) == doctest::Approx(2.0 / std::numbers::pi));

  const std::array<double, 2> same{1.3, 1.3};
  CHECK(stats::sine_det_prediction(same) == doctest::Approx(0.0).epsilon(1e-12));

  const std::array<double, 2> pair{0.2, 1.7};
  const std::array<double, 2> swapped{1.7, 0.2};
  CHECK(stats::sine_det_prediction(pair) ==
        doctest::Approx(stats::sine_det_prediction(swapped)).epsilon(1e-14));
  const double k = stats::sine_kernel(0.2, 1.7);
  CHECK(stats::sine_det_prediction(pair) == doctest::Approx(1.0 - k * k).epsilon(1e-12));

  const std::array<double, 3> triple{0.0, 0.9, 2.2};
  const std::array<double, 3> perm{0.9, 2.2, 0.0};
  CHECK(stats::sine_det_prediction(triple) ==
        doctest::Approx(stats::sine_det_prediction(perm)).epsilon(1e-12));
}

TEST_CASE("correlation estimators: input validation") {
  const auto samples = wishart_samples(24, 24, 100, 31001);
  stats::BinGrid grid;
  CHECK_THROWS_AS(stats::kpoint_correlation({}, 1, 2.0, grid), std::invalid_argument);
  CHECK_THROWS_AS(stats::kpoint_correlation(samples, 4, 2.0, grid), std::invalid_argument);
  CHECK_THROWS_AS(stats::kpoint_correlation(samples, 1, 5.0, grid), std::invalid_argument);
  std::vector<stats::SpectrumSample> few(samples.begin(), samples.begin() + 50);
  CHECK_THROWS_AS(stats::kpoint_correlation(few, 1, 2.0, grid), std::invalid_argument);
  CHECK_THROWS_AS(stats::averaged_correlation(samples, 2, 3.9, 0.3, grid), std::invalid_argument);
}

TEST_CASE("one-point correlation is flat at one") {
  const auto samples = wishart_samples(96, 96, 1500, 5150);
  stats::BinGrid grid;
  grid.lo = -3.0;
  grid.hi = 3.0;
  grid.count = 12;
  const auto est = stats::kpoint_correlation(samples, 1, 2.0, grid);
  for (int b = 3; b < 9; ++b) {  // central bins
    CAPTURE(b);
    CHECK(std::abs(est.estimate[static_cast<std::size_t>(b)] - 1.0) < 0.15);
  }
  const auto pred = stats::sine_prediction_for(est);
  for (double v : pred) CHECK(v == 1.0);
}

TEST_CASE("averaged correlation degenerates to the pointwise estimate") {
  const auto samples = wishart_samples(48, 48, 150, 777);
  stats::BinGrid grid;
  grid.count = 8;
  const auto point = stats::kpoint_correlation(samples, 2, 2.0, grid);
  const auto avg = stats::averaged_correlation(samples, 2, 2.0, 1e-9, grid, 4.0, 3);
  REQUIRE(point.estimate.size() == avg.estimate.size());
  for (std::size_t b = 0; b < point.estimate.size(); ++b)
    CHECK(std::abs(point.estimate[b] - avg.estimate[b]) < 1e-6);
}

TEST_CASE("three-point counting is symmetric in the two gap axes") {
  const auto samples = wishart_samples(48, 48, 150, 90210);
  stats::BinGrid grid;
  grid.count = 6;
  const auto est = stats::kpoint_correlation(samples, 3, 2.0, grid);
  REQUIRE(est.estimate.size() == 36);
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j) {
      CHECK(est.estimate[static_cast<std::size_t>(6 * i + j)] ==
            doctest::Approx(est.estimate[static_cast<std::size_t>(6 * j + i)]).epsilon(1e-12));
      CHECK(est.estimate[static_cast<std::size_t>(6 * i + j)] >= 0.0);
    }
}

TEST_CASE("test functions: evaluation and derivative certificates") {
  const stats::TestFunction g({0.0}, 1.5);
  CHECK(g(std::array<double, 1>{0.0}) == doctest::Approx(1.0));
  CHECK(g(std::array<double, 1>{1.5}) == doctest::Approx(std::exp(-0.5)));

  // Grid-search oracle for |G'| and |G''| against the certificates.
  for (int order : {1, 2}) {
    double sup = 0.0;
    const double h = 1e-4;
    for (double x = -10.0; x <= 10.0; x += 1e-3) {
      const auto f = [&](double t) { return g(std::array<double, 1>{t}); };
      const double d = (order == 1) ? (f(x + h) - f(x - h)) / (2 * h)
                                    : (f(x + h) - 2 * f(x) + f(x - h)) / (h * h);
      sup = std::max(sup, std::abs(d));
    }
    CHECK(sup <= g.derivative_bound(order) * (1.0 + 1e-3));
  }
  CHECK(g.derivative_bound(0) == doctest::Approx(1.0));

  const stats::TestFunction g2({1.0, -2.0}, 1.0);
  CHECK(g2.derivative_bound(2) >= g2.derivative_bound(1) * g2.derivative_bound(1) * 0.99);
  CHECK_THROWS_AS(g2.derivative_bound(6), std::invalid_argument);
  CHECK_THROWS_AS(stats::TestFunction({}, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(stats::TestFunction({0.0}, 0.0), std::invalid_argument);
}

TEST_CASE("four-moment compare: identical streams give exactly zero") {
  const auto a = harness::sample_scaled_eigenvalues("rademacher", 24, 24, {12}, 50, 99, 1);
  const auto b = harness::sample_scaled_eigenvalues("rademacher", 24, 24, {12}, 50, 99, 1);
  const stats::TestFunction g({24.0}, 2.0);
  const auto r = stats::four_moment_compare(a, b, g);
  CHECK(r.delta == 0.0);
  CHECK(r.mean_a == r.mean_b);
}

TEST_CASE("four-moment compare: independent wishart runs agree within noise") {
  const int n = 128;
  const auto a =
      harness::sample_scaled_eigenvalues("complex-gaussian", n, n, {n / 2}, 600, 4242, 1);
  const auto b =
      harness::sample_scaled_eigenvalues("complex-gaussian", n, n, {n / 2}, 600, 4242, 2);
  const double center = n * mp::mp_quantile(0.5, 1.0);
  const stats::TestFunction g({center}, 1.5);
  const auto r = stats::four_moment_compare(a, b, g);
  CHECK(r.delta < 3.0 * r.se_delta);

  Eigen::MatrixXd tiny(1, 1);
  CHECK_THROWS_AS(stats::four_moment_compare(tiny, tiny, g), std::invalid_argument);
}

TEST_CASE("eigenvalue upper bound statistic") {
  const auto q = quantile_sample(500);
  const mp::MPModel model(1.0);
  const double ratio = stats::eigen_upper_check(q, model, 0.1);
  CHECK(ratio > 0.0);
  CHECK(ratio <= 2.0);

  // A spectrum far above the bulk window never lands in any interval.
  const auto high = synthetic_sample({10.0, 11.0, 12.0}, 3);
  CHECK(stats::eigen_upper_check(high, model, 0.1) == 0.0);
}
