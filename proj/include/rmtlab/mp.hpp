#pragma once

#include <complex>
#include <span>
#include <utility>

namespace rmtlab::mp {

// Closed-form Marchenko-Pastur model for aspect ratio y in (0, 1]:
// density (1 / (2 pi x y)) sqrt((b - x)(x - a)) on [a, b] with
// a = (1 - sqrt(y))^2, b = (1 + sqrt(y))^2.
struct MPModel {
  double y;
  double a;
  double b;

  explicit MPModel(double aspect_ratio);
};

std::pair<double, double> mp_edges(double y);

double mp_density(double x, double y);

// CDF by adaptive Gauss-Kronrod quadrature after the trigonometric
// substitution x = a + (b - a) sin^2(theta), which removes the square-root
// edge singularities.
double mp_cdf(double x, double y);

// Inverse CDF (bisection plus Newton polish). quantile(i / (p + 1), y) is the
// classical location of lambda_i.
double mp_quantile(double q, double y);

// Stieltjes transform s(z) = int rho(x) / (x - z) dx for Im z > 0; satisfies
// y z s^2 + (y + z - 1) s + 1 = 0 with Im s > 0.
std::complex<double> mp_stieltjes(std::complex<double> z, double y);

// Kolmogorov-Smirnov distance between the empirical spectral distribution of
// an ascending eigenvalue list and the MP CDF.
double esd_distance(std::span<const double> ascending_lambda, double y);

}  // namespace rmtlab::mp
