#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "rmtlab/atoms.hpp"
#include "rmtlab/rng.hpp"

using namespace rmtlab;
using atoms::AtomDistribution;
using Complex = std::complex<double>;

namespace {

// Monte Carlo mixed-moment estimate, the sampling-side oracle.
double mc_moment(const AtomDistribution& d, int m, int l, long draws, std::uint64_t seed) {
  Rng rng(seed);
  double acc = 0.0;
  for (long i = 0; i < draws; ++i) {
    const Complex z = d.sample(rng);
    acc += std::pow(z.real(), m) * std::pow(z.imag(), l);
  }
  return acc / static_cast<double>(draws);
}

// Kolmogorov-Smirnov distance of draws against the standard normal CDF.
double ks_against_normal(std::vector<double> xs) {
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = 0.5 * std::erfc(-xs[i] / std::numbers::sqrt2);
    d = std::max(d, std::abs(f - i / n));
    d = std::max(d, std::abs(f - (i + 1) / n));
  }
  return d;
}

std::vector<const char*> fixed_catalog() {
  return {"rademacher",        "complex-bernoulli",   "three-point",   "complex-three-point",
          "heavy-three-point", "heavy-gauss-partner", "real-gaussian", "complex-gaussian"};
}

}  // namespace

TEST_CASE("discrete sampling stays on the support") {
  const auto d = AtomDistribution::rademacher();
  Rng rng(7);
  for (int i = 0; i < 2000; ++i) {
    const Complex z = d.sample(rng);
    CHECK(z.imag() == 0.0);
    CHECK(std::abs(z.real()) == 1.0);
  }
}

TEST_CASE("gauss-divisible with t = 1 collapses to the gaussian") {
  const auto d = atoms::gauss_divisible_mix(AtomDistribution::rademacher(), 1.0);
  CHECK(d.kind() == AtomDistribution::Kind::RealGaussian);
  Rng rng(11);
  std::vector<double> xs(100000);
  for (double& x : xs) x = d.sample(rng).real();
  CHECK(ks_against_normal(std::move(xs)) < 0.01);  // KS crit at 1e5 draws ~ 0.005
}

TEST_CASE("complex gaussian |z|^2 law of large numbers") {
  const auto d = AtomDistribution::complex_gaussian();
  Rng rng(3);
  double acc = 0.0;
  const long n = 1000000;
  for (long i = 0; i < n; ++i) acc += std::norm(d.sample(rng));
  CHECK(std::abs(acc / n - 1.0) < 0.01);
}

TEST_CASE("mixed moments: frozen closed-form values") {
  const auto rad = AtomDistribution::rademacher();
  CHECK(rad.mixed_moment(3, 0) == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(rad.mixed_moment(4, 0) == doctest::Approx(1.0));

  const auto g = AtomDistribution::real_gaussian();
  CHECK(g.mixed_moment(4, 0) == doctest::Approx(3.0));
  CHECK(g.mixed_moment(6, 0) == doctest::Approx(15.0));

  const auto cg = AtomDistribution::complex_gaussian();
  CHECK(cg.mixed_moment(2, 0) == doctest::Approx(0.5));
  CHECK(cg.mixed_moment(0, 2) == doctest::Approx(0.5));
  CHECK(cg.mixed_moment(2, 2) == doctest::Approx(0.25));
  CHECK(cg.mixed_moment(1, 1) == doctest::Approx(0.0));
}

TEST_CASE("mixed moments reject negative orders") {
  CHECK_THROWS_AS(AtomDistribution::rademacher().mixed_moment(-1, 0), std::invalid_argument);
}

TEST_CASE("standardization invariants across the catalog") {
  for (const char* name : fixed_catalog()) {
    CAPTURE(name);
    const auto d = atoms::from_name(name);
    CHECK(d.mixed_moment(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(d.mixed_moment(1, 0)) < 1e-10);
    CHECK(std::abs(d.mixed_moment(0, 1)) < 1e-10);
    CHECK(std::abs(d.mixed_moment(2, 0) + d.mixed_moment(0, 2) - 1.0) < 1e-10);
  }
}

TEST_CASE("match_order: identity, classic pairs, worst offender") {
  const auto rad = AtomDistribution::rademacher();
  const auto g = AtomDistribution::real_gaussian();

  CHECK(atoms::match_order(rad, rad, 4).matched);

  CHECK(atoms::match_order(rad, g, 3).matched);
  const auto k4 = atoms::match_order(rad, g, 4);
  CHECK_FALSE(k4.matched);
  CHECK(k4.worst_m == 4);
  CHECK(k4.worst_l == 0);
  CHECK(k4.discrepancy == doctest::Approx(2.0));

  CHECK(atoms::match_order(AtomDistribution::complex_bernoulli(),
                           AtomDistribution::complex_gaussian(), 3)
            .matched);
}

TEST_CASE("match_order is symmetric and monotone in k") {
  const auto a = AtomDistribution::heavy_three_point();
  const auto b = AtomDistribution::complex_gaussian();
  for (int k = 1; k <= 5; ++k) {
    const auto ab = atoms::match_order(a, b, k);
    const auto ba = atoms::match_order(b, a, k);
    CHECK(ab.matched == ba.matched);
    CHECK(ab.discrepancy == doctest::Approx(ba.discrepancy).epsilon(1e-14));
    if (!ab.matched) {  // once broken, stays broken at larger k
      for (int kk = k + 1; kk <= 6; ++kk) CHECK_FALSE(atoms::match_order(a, b, kk).matched);
      break;
    }
  }
}

TEST_CASE("catalog pairs built for the four-moment contrast") {
  const auto heavy = AtomDistribution::heavy_three_point();
  const auto partner = AtomDistribution::heavy_gauss_partner();
  const auto cg = AtomDistribution::complex_gaussian();
  const auto c3 = AtomDistribution::complex_three_point();

  CHECK(partner.kind() == AtomDistribution::Kind::GaussDivisible);
  CHECK(atoms::match_order(heavy, partner, 4).matched);
  CHECK(atoms::match_order(heavy, cg, 3).matched);
  CHECK_FALSE(atoms::match_order(heavy, cg, 4).matched);
  CHECK(atoms::match_order(c3, cg, 4).matched);
  CHECK_FALSE(atoms::match_order(c3, cg, 6).matched);  // sixth moments differ
}

TEST_CASE("monte carlo moments converge at the 1/sqrt(N) rate") {
  const auto d = AtomDistribution::complex_bernoulli();
  const double exact = d.mixed_moment(2, 0);
  const double e4 = std::abs(mc_moment(d, 2, 0, 10000, 21) - exact);
  const double e6 = std::abs(mc_moment(d, 2, 0, 1000000, 21) - exact);
  CHECK(e4 < 10.0 / std::sqrt(10000.0));
  CHECK(e6 < 10.0 / std::sqrt(1000000.0));
}

TEST_CASE("gauss-divisible moments: binomial expansion against oracles") {
  const auto mix = atoms::gauss_divisible_mix(AtomDistribution::rademacher(), 0.5);

  // Hand expansion: E z^4 = (1-t)^2 * 1 + 6 t (1-t) + 3 t^2 at t = 1/2.
  CHECK(mix.mixed_moment(4, 0) == doctest::Approx(2.5).epsilon(1e-12));
  CHECK(mix.mixed_moment(2, 0) == doctest::Approx(1.0).epsilon(1e-12));

  const double mc = mc_moment(mix, 4, 0, 1000000, 5);
  CHECK(std::abs(mc - 2.5) < 0.035);

  const auto cmix = atoms::gauss_divisible_mix(AtomDistribution::complex_bernoulli(), 0.3);
  CHECK(cmix.mixed_moment(2, 0) + cmix.mixed_moment(0, 2) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("gauss-divisible moments are continuous at t -> 0") {
  const auto base = AtomDistribution::complex_bernoulli();
  const auto mix = atoms::gauss_divisible_mix(base, 1e-8);
  for (int s = 1; s <= 4; ++s)
    for (int l = 0; l <= s; ++l)
      CHECK(mix.mixed_moment(s - l, l) ==
            doctest::Approx(base.mixed_moment(s - l, l)).epsilon(1e-6).scale(1.0));
}

TEST_CASE("gauss-divisible rejects t outside (0, 1]") {
  CHECK_THROWS_AS(atoms::gauss_divisible_mix(AtomDistribution::rademacher(), 0.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(atoms::gauss_divisible_mix(AtomDistribution::rademacher(), 1.5),
                  std::invalid_argument);
}

TEST_CASE("nested gauss-divisible mixtures flatten") {
  const auto once = atoms::gauss_divisible_mix(AtomDistribution::complex_bernoulli(), 0.25);
  const auto twice = atoms::gauss_divisible_mix(once, 0.4);
  CHECK(twice.kind() == AtomDistribution::Kind::GaussDivisible);
  CHECK(twice.mixing_weight() == doctest::Approx(0.25 + 0.4 - 0.1));
  CHECK(twice.base().kind() == AtomDistribution::Kind::Discrete);
}

TEST_CASE("truncation: bounded law unchanged") {
  const auto t = atoms::truncate_standardize(AtomDistribution::rademacher(), 10.0);
  CHECK(t.truncation_shift() == Complex(0, 0));
  CHECK(t.truncation_rescale() == doctest::Approx(1.0));
  CHECK(t.mixed_moment(4, 0) == doctest::Approx(1.0));
}

TEST_CASE("truncated real gaussian: closed form against the erf oracle") {
  const double K = 3.0;
  const auto t = atoms::truncate_standardize(AtomDistribution::real_gaussian(), K);

  // Oracle: Var = 1 - 2 K phi(K) / (2 Phi(K) - 1), computed right here.
  const double phi = std::exp(-0.5 * K * K) / std::sqrt(2.0 * std::numbers::pi);
  const double mass = std::erf(K / std::numbers::sqrt2);
  const double var = 1.0 - 2.0 * K * phi / mass;
  CHECK(t.truncation_rescale() == doctest::Approx(1.0 / std::sqrt(var)).epsilon(1e-12));

  CHECK(std::abs(t.mixed_moment(2, 0) - 1.0) < 1e-10);
  CHECK(std::abs(t.mixed_moment(1, 0)) < 1e-12);

  // Boundedness forces the fourth moment under K^2 times the second.
  CHECK(t.mixed_moment(4, 0) <= K * K * t.mixed_moment(2, 0));

  // Monte Carlo agreement through the rejection sampler.
  CHECK(std::abs(mc_moment(t, 2, 0, 400000, 9) - 1.0) < 0.01);
}

TEST_CASE("truncated complex gaussian: disk conditioning") {
  const auto t = atoms::truncate_standardize(AtomDistribution::complex_gaussian(), 3.0);
  CHECK(std::abs(t.mixed_moment(2, 0) + t.mixed_moment(0, 2) - 1.0) < 1e-10);
  CHECK(std::abs(t.mixed_moment(1, 1)) < 1e-12);
  CHECK(std::abs(mc_moment(t, 2, 2, 400000, 13) - t.mixed_moment(2, 2)) < 0.005);
}

TEST_CASE("truncated gauss-divisible mixtures, real and complex") {
  const auto real_mix = atoms::gauss_divisible_mix(AtomDistribution::three_point(), 0.5);
  const auto tr = atoms::truncate_standardize(real_mix, 3.0);
  CHECK(std::abs(tr.mixed_moment(2, 0) - 1.0) < 1e-10);
  CHECK(std::abs(tr.mixed_moment(1, 0)) < 1e-12);
  CHECK(std::abs(mc_moment(tr, 4, 0, 400000, 17) - tr.mixed_moment(4, 0)) < 0.05);

  const auto cplx_mix = atoms::gauss_divisible_mix(AtomDistribution::complex_three_point(), 0.5);
  const auto tc = atoms::truncate_standardize(cplx_mix, 3.0);
  CHECK(std::abs(tc.mixed_moment(2, 0) + tc.mixed_moment(0, 2) - 1.0) < 1e-10);
  CHECK(std::abs(tc.mixed_moment(1, 0)) < 1e-10);
  CHECK(std::abs(mc_moment(tc, 2, 0, 400000, 19) - tc.mixed_moment(2, 0)) < 0.01);
}

TEST_CASE("truncation is idempotent once support fits") {
  const auto t1 = atoms::truncate_standardize(AtomDistribution::real_gaussian(), 3.0);
  const auto r1 = t1.support_radius();
  REQUIRE(r1.has_value());
  CHECK(*r1 <= 6.0);  // the 2K bound
  const auto t2 = atoms::truncate_standardize(t1, 4.0);
  for (int s = 1; s <= 4; ++s)
    CHECK(t2.mixed_moment(s, 0) == doctest::Approx(t1.mixed_moment(s, 0)).epsilon(1e-12));
}

TEST_CASE("truncation input validation") {
  CHECK_THROWS_AS(atoms::truncate_standardize(AtomDistribution::real_gaussian(), 2.0),
                  std::invalid_argument);
}

TEST_CASE("third-order match: rademacher target") {
  const auto target = AtomDistribution::rademacher().moments(3);
  const auto sol = atoms::solve_third_order_match(target);
  CHECK(sol.residual <= 1e-9);
  CHECK(atoms::match_order(sol.law, AtomDistribution::rademacher(), 3).matched);
}

TEST_CASE("third-order match: skewed real target") {
  atoms::MomentTable t(3);
  t.set(0, 0, 1.0);
  t.set(2, 0, 1.0);
  t.set(3, 0, 1.0);  // E x^3 = 1, everything with l >= 1 zero
  const auto sol = atoms::solve_third_order_match(t);
  CHECK(sol.residual <= 1e-9);
  CHECK(sol.law.mixed_moment(3, 0) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(sol.law.mixed_moment(2, 0) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(sol.support_radius < 5.0);
}

TEST_CASE("third-order match: complex gaussian target") {
  const auto target = AtomDistribution::complex_gaussian().moments(3);
  const auto sol = atoms::solve_third_order_match(target);
  CHECK(sol.residual <= 1e-9);
  CHECK(sol.support_radius <= 10.0);
  CHECK(atoms::match_order(sol.law, AtomDistribution::complex_gaussian(), 3).matched);
}

TEST_CASE("catalog name parsing") {
  CHECK(atoms::catalog_names().size() >= 6);
  const auto gd = atoms::from_name("gauss-divisible:t=0.5:base=rademacher");
  CHECK(gd.kind() == AtomDistribution::Kind::GaussDivisible);
  CHECK(gd.mixing_weight() == doctest::Approx(0.5));

  const auto tr = atoms::from_name("truncated:K=5:base=gaussian");
  CHECK(tr.kind() == AtomDistribution::Kind::Truncated);
  CHECK(tr.truncation_radius() == doctest::Approx(5.0));

  const auto nested =
      atoms::from_name("truncated:K=4:base=gauss-divisible:t=0.5:base=three-point");
  CHECK(nested.kind() == AtomDistribution::Kind::Truncated);

  CHECK_THROWS_AS(atoms::from_name("no-such-atom"), std::invalid_argument);
  CHECK_THROWS_AS(atoms::from_name("gauss-divisible:t=0.5"), std::invalid_argument);
}

TEST_CASE("matrix entry draws are deterministic per seed") {
  const auto d = AtomDistribution::heavy_gauss_partner();
  Rng a(42), b(42);
  for (int i = 0; i < 50; ++i) CHECK(d.sample(a) == d.sample(b));
}
