#include "rmtlab/mp.hpp"

#include <cmath>
#include <functional>
#include <numbers>
#include <stdexcept>

namespace rmtlab::mp {

namespace {

constexpr double kPi = std::numbers::pi;

void check_aspect(double y) {
  if (!(y > 0.0) || y > 1.0) throw std::invalid_argument("mp: y must lie in (0, 1]");
}

// Gauss-Kronrod 7-15 pair on [-1, 1].
constexpr double kKronrodNodes[15] = {
    -0.991455371120813, -0.949107912342759, -0.864864423359769, -0.741531185599394,
    -0.586087235467691, -0.405845151377397, -0.207784955007898, 0.0,
    0.207784955007898,  0.405845151377397,  0.586087235467691,  0.741531185599394,
    0.864864423359769,  0.949107912342759,  0.991455371120813};
constexpr double kKronrodWeights[15] = {
    0.022935322010529, 0.063092092629979, 0.104790010322250, 0.140653259715525,
    0.169004726639267, 0.190350578064785, 0.204432940075298, 0.209482141084728,
    0.204432940075298, 0.190350578064785, 0.169004726639267, 0.140653259715525,
    0.104790010322250, 0.063092092629979, 0.022935322010529};
constexpr double kGaussWeights[7] = {
    0.129484966168870, 0.279705391489277, 0.381830050505119, 0.417959183673469,
    0.381830050505119, 0.279705391489277, 0.129484966168870};

template <typename Value, typename F>
void gk15(const F& f, double lo, double hi, Value* kronrod, double* error) {
  const double c = 0.5 * (lo + hi), h = 0.5 * (hi - lo);
  Value k{}, g{};
  for (int i = 0; i < 15; ++i) {
    const Value v = f(c + h * kKronrodNodes[i]);
    k += kKronrodWeights[i] * v;
    if (i % 2 == 1) g += kGaussWeights[i / 2] * v;
  }
  k *= h;
  g *= h;
  *kronrod = k;
  *error = std::abs(k - g);
}

template <typename Value, typename F>
Value adaptive_gk(const F& f, double lo, double hi, double tol, int depth = 0) {
  Value k{};
  double err = 0.0;
  gk15<Value>(f, lo, hi, &k, &err);
  if (err <= tol || depth >= 40) return k;
  const double mid = 0.5 * (lo + hi);
  return adaptive_gk<Value>(f, lo, mid, tol * 0.5, depth + 1) +
         adaptive_gk<Value>(f, mid, hi, tol * 0.5, depth + 1);
}

// Density after the substitution x = a + (b - a) sin^2(theta); smooth on
// [0, pi/2]. For y = 1 (a = 0) the 0/0 at theta = 0 cancels analytically.
double theta_integrand(double theta, double y, double a, double b) {
  const double s2 = std::sin(theta) * std::sin(theta);
  const double c2 = 1.0 - s2;
  const double width = b - a;
  if (a == 0.0) return width / (kPi * y) * c2;
  const double x = a + width * s2;
  return width * width / (kPi * y) * s2 * c2 / x;
}

}  // namespace

MPModel::MPModel(double aspect_ratio) : y(aspect_ratio) {
  check_aspect(y);
  const auto [lo, hi] = mp_edges(y);
  a = lo;
  b = hi;
}

std::pair<double, double> mp_edges(double y) {
  check_aspect(y);
  const double r = std::sqrt(y);
  return {(1.0 - r) * (1.0 - r), (1.0 + r) * (1.0 + r)};
}

double mp_density(double x, double y) {
  check_aspect(y);
  const auto [a, b] = mp_edges(y);
  if (x <= a || x >= b) return 0.0;
  return std::sqrt((b - x) * (x - a)) / (2.0 * kPi * x * y);
}

double mp_cdf(double x, double y) {
  check_aspect(y);
  const auto [a, b] = mp_edges(y);
  if (x <= a) return 0.0;
  if (x >= b) return 1.0;
  const double theta = std::asin(std::sqrt((x - a) / (b - a)));
  const double v = adaptive_gk<double>(
      [&](double t) { return theta_integrand(t, y, a, b); }, 0.0, theta, 1e-13);
  return std::min(std::max(v, 0.0), 1.0);
}

double mp_quantile(double q, double y) {
  check_aspect(y);
  if (q < 0.0 || q > 1.0) throw std::invalid_argument("mp_quantile: q must lie in [0, 1]");
  const auto [a, b] = mp_edges(y);
  if (q == 0.0) return a;
  if (q == 1.0) return b;

  double lo = a, hi = b;
  for (int it = 0; it < 90; ++it) {
    const double mid = 0.5 * (lo + hi);
    (mp_cdf(mid, y) < q ? lo : hi) = mid;
  }
  double x = 0.5 * (lo + hi);
  for (int it = 0; it < 4; ++it) {
    const double dens = mp_density(x, y);
    if (dens <= 0.0) break;
    const double step = (mp_cdf(x, y) - q) / dens;
    const double next = x - step;
    if (next <= a || next >= b) break;
    x = next;
  }
  return x;
}

std::complex<double> mp_stieltjes(std::complex<double> z, double y) {
  check_aspect(y);
  if (!(z.imag() > 0.0)) throw std::invalid_argument("mp_stieltjes: Im z must be positive");

  // Roots of y z s^2 + (y + z - 1) s + 1 = 0; computed with the
  // cancellation-safe pairing, then the Herglotz root (Im s > 0) is returned.
  const std::complex<double> w = y + z - 1.0;
  const std::complex<double> disc = std::sqrt(w * w - 4.0 * y * z);
  const std::complex<double> big =
      (std::norm(w + disc) >= std::norm(w - disc)) ? (w + disc) : (w - disc);
  const std::complex<double> s1 = -big / (2.0 * y * z);
  const std::complex<double> s2 = 1.0 / (y * z * s1);  // product of roots = 1 / (y z)
  const std::complex<double> s = (s1.imag() > 0.0) ? s1 : s2;
  if (!(s.imag() > 0.0))
    throw std::runtime_error("mp_stieltjes: no Herglotz root found");
  return s;
}

double esd_distance(std::span<const double> ascending_lambda, double y) {
  check_aspect(y);
  const std::size_t p = ascending_lambda.size();
  if (p == 0) throw std::invalid_argument("esd_distance: empty spectrum");
  for (std::size_t i = 1; i < p; ++i)
    if (ascending_lambda[i] < ascending_lambda[i - 1])
      throw std::invalid_argument("esd_distance: spectrum must be ascending");

  double dist = 0.0;
  for (std::size_t i = 0; i < p; ++i) {
    const double f = mp_cdf(ascending_lambda[i], y);
    dist = std::max(dist, std::abs(f - static_cast<double>(i) / p));
    dist = std::max(dist, std::abs(f - static_cast<double>(i + 1) / p));
  }
  return dist;
}

}  // namespace rmtlab::mp
