#include "rmtlab/atoms.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <sstream>

#include <Eigen/Dense>

namespace rmtlab::atoms {

namespace {

constexpr double kPi = std::numbers::pi;

double normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * kPi); }
double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

// (n)!! with (-1)!! = 0!! = 1.
double double_factorial(int n) {
  double r = 1.0;
  for (int k = n; k > 1; k -= 2) r *= k;
  return r;
}

double binom(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

// E X^m Y^l for X, Y the real/imaginary parts of the standard laws.
double real_gaussian_moment(int m, int l) {
  if (l > 0) return 0.0;
  if (m % 2 != 0) return 0.0;
  return double_factorial(m - 1);
}

double complex_gaussian_moment(int m, int l) {
  if (m % 2 != 0 || l % 2 != 0) return 0.0;
  return double_factorial(m - 1) * double_factorial(l - 1) /
         std::pow(2.0, 0.5 * static_cast<double>(m + l));
}

// Partial moments T_j = E[Z^j 1_{a<=Z<=b}] of the standard normal.
std::vector<double> truncated_normal_partials(double a, double b, int max_order) {
  std::vector<double> t(static_cast<std::size_t>(max_order) + 1);
  const double fa = normal_pdf(a), fb = normal_pdf(b);
  t[0] = normal_cdf(b) - normal_cdf(a);
  if (max_order >= 1) t[1] = fa - fb;
  for (int j = 2; j <= max_order; ++j)
    t[j] = (j - 1) * t[j - 2] + std::pow(a, j - 1) * fa - std::pow(b, j - 1) * fb;
  return t;
}

// Integral of s^j e^{-s} over [0, T] for integer j >= 0.
double lower_gamma_int(int j, double T) {
  double fact = 1.0, partial = 1.0, term = 1.0;
  for (int i = 1; i <= j; ++i) {
    fact *= i;
    term *= T / i;
    partial += term;
  }
  return fact * (1.0 - std::exp(-T) * partial);
}

// E cos^m(t) sin^l(t) over the uniform angle; zero unless m and l are even.
double angular_moment(int m, int l) {
  if (m % 2 != 0 || l % 2 != 0) return 0.0;
  return double_factorial(m - 1) * double_factorial(l - 1) / double_factorial(m + l);
}

// Gauss-Legendre nodes/weights on [-1, 1].
void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
  x.assign(n, 0.0);
  w.assign(n, 0.0);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double z = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
      }
      pp = n * (z * p0 - p1) / (z * z - 1.0);
      const double dz = p0 / pp;
      z -= dz;
      if (std::abs(dz) < 1e-15) break;
    }
    x[i] = -z;
    x[n - 1 - i] = z;
    w[i] = w[n - 1 - i] = 2.0 / ((1.0 - z * z) * pp * pp);
  }
}

double sum_or_zero(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s;
}

}  // namespace

// ---------------------------------------------------------------------------
// MomentTable

MomentTable::MomentTable(int order) : order_(order) {
  if (order < 1) throw std::invalid_argument("MomentTable: order must be >= 1");
  entries_.assign(static_cast<std::size_t>(order + 1) * (order + 2) / 2, 0.0);
}

double MomentTable::at(int m, int l) const {
  if (m < 0 || l < 0 || m + l > order_) throw std::invalid_argument("MomentTable::at: bad index");
  const int s = m + l;
  return entries_[static_cast<std::size_t>(s) * (s + 1) / 2 + l];
}

void MomentTable::set(int m, int l, double value) {
  if (m < 0 || l < 0 || m + l > order_) throw std::invalid_argument("MomentTable::set: bad index");
  const int s = m + l;
  entries_[static_cast<std::size_t>(s) * (s + 1) / 2 + l] = value;
}

// ---------------------------------------------------------------------------
// Factories

namespace {

void validate_standardized(const AtomDistribution& d) {
  if (std::abs(d.mixed_moment(1, 0)) > 1e-10 || std::abs(d.mixed_moment(0, 1)) > 1e-10)
    throw std::invalid_argument("atom law must have mean zero");
  if (std::abs(d.mixed_moment(2, 0) + d.mixed_moment(0, 2) - 1.0) > 1e-10)
    throw std::invalid_argument("atom law must have E|z|^2 = 1");
}

}  // namespace

AtomDistribution AtomDistribution::discrete(std::vector<Complex> support,
                                            std::vector<double> probs, std::string name) {
  if (support.empty() || support.size() != probs.size())
    throw std::invalid_argument("discrete atom: support/probability size mismatch");
  double total = 0.0;
  for (double& p : probs) {
    if (p < -1e-15) throw std::invalid_argument("discrete atom: negative probability");
    p = std::max(p, 0.0);
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-12)
    throw std::invalid_argument("discrete atom: probabilities must sum to 1");

  AtomDistribution d;
  d.kind_ = Kind::Discrete;
  d.name_ = std::move(name);
  d.support_ = std::move(support);
  d.probs_ = std::move(probs);
  d.is_real_ = std::all_of(d.support_.begin(), d.support_.end(),
                           [](Complex z) { return z.imag() == 0.0; });
  d.cumulative_.resize(d.probs_.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < d.probs_.size(); ++i) {
    acc += d.probs_[i];
    d.cumulative_[i] = acc;
  }
  d.cumulative_.back() = 1.0;
  validate_standardized(d);
  return d;
}

AtomDistribution AtomDistribution::real_gaussian() {
  AtomDistribution d;
  d.kind_ = Kind::RealGaussian;
  d.is_real_ = true;
  d.name_ = "real-gaussian";
  return d;
}

AtomDistribution AtomDistribution::complex_gaussian() {
  AtomDistribution d;
  d.kind_ = Kind::ComplexGaussian;
  d.is_real_ = false;
  d.name_ = "complex-gaussian";
  return d;
}

AtomDistribution AtomDistribution::rademacher() {
  return discrete({Complex(1, 0), Complex(-1, 0)}, {0.5, 0.5}, "rademacher");
}

AtomDistribution AtomDistribution::complex_bernoulli() {
  const double h = 1.0 / std::numbers::sqrt2;
  return discrete({Complex(h, h), Complex(h, -h), Complex(-h, h), Complex(-h, -h)},
                  {0.25, 0.25, 0.25, 0.25}, "complex-bernoulli");
}

AtomDistribution AtomDistribution::three_point() {
  const double s = std::sqrt(3.0);
  return discrete({Complex(-s, 0), Complex(0, 0), Complex(s, 0)},
                  {1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0}, "three-point");
}

namespace {

// Product law of two independent copies of a real component law on Re and Im.
AtomDistribution component_product(const std::vector<double>& values,
                                   const std::vector<double>& probs, std::string name) {
  std::vector<Complex> support;
  std::vector<double> p;
  for (std::size_t i = 0; i < values.size(); ++i)
    for (std::size_t j = 0; j < values.size(); ++j) {
      support.emplace_back(values[i], values[j]);
      p.push_back(probs[i] * probs[j]);
    }
  return AtomDistribution::discrete(std::move(support), std::move(p), std::move(name));
}

}  // namespace

AtomDistribution AtomDistribution::complex_three_point() {
  const double s = std::sqrt(1.5);
  return component_product({-s, 0.0, s}, {1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0},
                           "complex-three-point");
}

AtomDistribution AtomDistribution::heavy_three_point() {
  const double s = std::sqrt(3.0);
  return component_product({-s, 0.0, s}, {1.0 / 12.0, 5.0 / 6.0, 1.0 / 12.0},
                           "heavy-three-point");
}

AtomDistribution AtomDistribution::heavy_gauss_partner() {
  // Component law with E X^4 = 15/4, so that the t = 1/2 gaussian mixture has
  // component fourth moment 3/2, matching heavy_three_point to order 4.
  const double s = std::sqrt(7.5);
  AtomDistribution core = component_product({-s, 0.0, s}, {1.0 / 30.0, 14.0 / 15.0, 1.0 / 30.0},
                                            "heavy-partner-core");
  AtomDistribution d = gauss_divisible_mix(core, 0.5);
  d.name_ = "heavy-gauss-partner";
  return d;
}

const AtomDistribution& AtomDistribution::base() const {
  if (!base_) throw std::logic_error("AtomDistribution::base: not a composite kind");
  return *base_;
}

std::optional<double> AtomDistribution::support_radius() const {
  switch (kind_) {
    case Kind::Discrete: {
      double r = 0.0;
      for (const Complex& z : support_) r = std::max(r, std::abs(z));
      return r;
    }
    case Kind::Truncated:
      return (trunc_radius_ + std::abs(trunc_shift_)) * trunc_scale_;
    default:
      return std::nullopt;
  }
}

// ---------------------------------------------------------------------------
// Sampling

Complex AtomDistribution::sample(Rng& rng) const {
  switch (kind_) {
    case Kind::Discrete: {
      const double u = rng.uniform();
      const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
      const std::size_t i = std::min<std::size_t>(
          static_cast<std::size_t>(it - cumulative_.begin()), support_.size() - 1);
      return support_[i];
    }
    case Kind::RealGaussian:
      return {rng.gaussian(), 0.0};
    case Kind::ComplexGaussian:
      return rng.complex_gaussian();
    case Kind::GaussDivisible: {
      const Complex zb = base_->sample(rng);
      const Complex zg = is_real_ ? Complex(rng.gaussian(), 0.0) : rng.complex_gaussian();
      return std::sqrt(1.0 - t_) * zb + std::sqrt(t_) * zg;
    }
    case Kind::Truncated: {
      Complex z = base_->sample(rng);
      while (std::abs(z) > trunc_radius_) z = base_->sample(rng);
      return (z - trunc_shift_) * trunc_scale_;
    }
  }
  throw std::logic_error("AtomDistribution::sample: unreachable");
}

// ---------------------------------------------------------------------------
// Mixed moments

double AtomDistribution::mixed_moment(int m, int l) const {
  if (m < 0 || l < 0) throw std::invalid_argument("mixed_moment: orders must be nonnegative");
  switch (kind_) {
    case Kind::Discrete: {
      double s = 0.0;
      for (std::size_t i = 0; i < support_.size(); ++i)
        s += probs_[i] * std::pow(support_[i].real(), m) * std::pow(support_[i].imag(), l);
      return s;
    }
    case Kind::RealGaussian:
      return real_gaussian_moment(m, l);
    case Kind::ComplexGaussian:
      return complex_gaussian_moment(m, l);
    case Kind::GaussDivisible: {
      // Binomial expansion of (1-t)^{1/2} z' + t^{1/2} g over independent parts.
      const double c1 = std::sqrt(1.0 - t_), c2 = std::sqrt(t_);
      double s = 0.0;
      for (int mm = 0; mm <= m; ++mm)
        for (int ll = 0; ll <= l; ++ll) {
          const double g = is_real_ ? real_gaussian_moment(m - mm, l - ll)
                                    : complex_gaussian_moment(m - mm, l - ll);
          if (g == 0.0) continue;
          const double bm = base_->mixed_moment(mm, ll);
          if (bm == 0.0) continue;
          s += binom(m, mm) * binom(l, ll) * std::pow(c1, mm + ll) *
               std::pow(c2, (m - mm) + (l - ll)) * bm * g;
        }
      return s;
    }
    case Kind::Truncated: {
      if (!support_.empty()) {
        // Materialized representation (exact for discrete bases, quadrature
        // discretization otherwise); points are already standardized.
        double s = 0.0;
        for (std::size_t i = 0; i < support_.size(); ++i)
          s += probs_[i] * std::pow(support_[i].real(), m) * std::pow(support_[i].imag(), l);
        return s;
      }
      // Analytic path: shift/rescale transform of the conditioned raw moments.
      const double c = trunc_scale_;
      const double sr = trunc_shift_.real(), si = trunc_shift_.imag();
      double s = 0.0;
      for (int mm = 0; mm <= m; ++mm)
        for (int ll = 0; ll <= l; ++ll) {
          const double raw = conditioned_raw_moment(mm, ll);
          if (raw == 0.0) continue;
          s += binom(m, mm) * binom(l, ll) * std::pow(-sr, m - mm) * std::pow(-si, l - ll) * raw;
        }
      return s * std::pow(c, m + l);
    }
  }
  throw std::logic_error("mixed_moment: unreachable");
}

// Raw moments of the base conditioned on |z| <= K (no recentering/rescaling).
double AtomDistribution::conditioned_raw_moment(int m, int l) const {
  const AtomDistribution& b = *base_;
  const double K = trunc_radius_;
  switch (b.kind_) {
    case Kind::RealGaussian: {
      if (l > 0) return 0.0;
      const auto t = truncated_normal_partials(-K, K, m);
      return t[m] / t[0];
    }
    case Kind::ComplexGaussian: {
      if (m % 2 != 0 || l % 2 != 0) return 0.0;
      // Radially symmetric: |z|^2 is Exp(1) truncated to [0, K^2].
      const double T = K * K;
      const int j = (m + l) / 2;
      const double r2j = lower_gamma_int(j, T) / (1.0 - std::exp(-T));
      return r2j * angular_moment(m, l);
    }
    case Kind::GaussDivisible: {
      // Real discrete base + real gaussian component: gaussian-mixture
      // branches with closed-form truncated-normal moments.
      if (!b.is_real_ || l > 0) {
        if (l > 0 && b.is_real_) return 0.0;
        throw std::runtime_error("conditioned_raw_moment: unsupported kind/order combination");
      }
      const AtomDistribution& inner = *b.base_;
      const double sd = std::sqrt(b.t_), c1 = std::sqrt(1.0 - b.t_);
      double mass = 0.0, val = 0.0;
      for (std::size_t k = 0; k < inner.support_.size(); ++k) {
        const double c = c1 * inner.support_[k].real();
        const auto t = truncated_normal_partials((-K - c) / sd, (K - c) / sd, m);
        double branch = 0.0;
        for (int j = 0; j <= m; ++j)
          branch += binom(m, j) * std::pow(c, m - j) * std::pow(sd, j) * t[j];
        mass += inner.probs_[k] * t[0];
        val += inner.probs_[k] * branch;
      }
      return val / mass;
    }
    default:
      throw std::runtime_error("conditioned_raw_moment: unsupported base kind");
  }
}

MomentTable AtomDistribution::moments(int order) const {
  MomentTable t(order);
  for (int s = 0; s <= order; ++s)
    for (int l = 0; l <= s; ++l) t.set(s - l, l, mixed_moment(s - l, l));
  return t;
}

// ---------------------------------------------------------------------------
// Matching

MatchReport match_order(const AtomDistribution& a, const AtomDistribution& b, int k, double tol) {
  if (k < 1) throw std::invalid_argument("match_order: k must be >= 1");
  MatchReport rep;
  rep.matched = true;
  for (int s = 0; s <= k; ++s)
    for (int l = 0; l <= s; ++l) {
      const int m = s - l;
      const double d = std::abs(a.mixed_moment(m, l) - b.mixed_moment(m, l));
      if (d > rep.discrepancy) {
        rep.discrepancy = d;
        rep.worst_m = m;
        rep.worst_l = l;
      }
    }
  rep.matched = rep.discrepancy <= tol;
  return rep;
}

// ---------------------------------------------------------------------------
// Gauss-divisible mixing

AtomDistribution gauss_divisible_mix(const AtomDistribution& base, double t) {
  if (!(t > 0.0) || t > 1.0)
    throw std::invalid_argument("gauss_divisible_mix: t must lie in (0, 1]");
  if (t == 1.0 || base.kind() == AtomDistribution::Kind::RealGaussian ||
      base.kind() == AtomDistribution::Kind::ComplexGaussian) {
    // The mixture is itself gaussian.
    return base.is_real() ? AtomDistribution::real_gaussian()
                          : AtomDistribution::complex_gaussian();
  }
  if (base.kind() == AtomDistribution::Kind::GaussDivisible) {
    // Flatten: mixing a mixture is a mixture with combined weight.
    const double t_eff = t + base.mixing_weight() - t * base.mixing_weight();
    return gauss_divisible_mix(base.base(), t_eff);
  }
  AtomDistribution d;
  d.kind_ = AtomDistribution::Kind::GaussDivisible;
  d.is_real_ = base.is_real();
  d.t_ = t;
  d.base_ = std::make_shared<AtomDistribution>(base);
  std::ostringstream name;
  name << "gauss-divisible:t=" << t << ":base=" << base.name();
  d.name_ = name.str();
  validate_standardized(d);
  return d;
}

// ---------------------------------------------------------------------------
// Truncation

AtomDistribution truncate_standardize(const AtomDistribution& dist, double K) {
  if (!(K >= 3.0)) throw std::invalid_argument("truncate_standardize: K must be >= 3");

  using Kind = AtomDistribution::Kind;
  if (const auto r = dist.support_radius(); r && *r <= K) {
    if (dist.kind() == Kind::Truncated) return dist;  // idempotent once support fits
    // Bounded discrete law: unchanged (shift 0, rescale 1).
    AtomDistribution d;
    d.kind_ = Kind::Truncated;
    d.is_real_ = dist.is_real();
    d.base_ = std::make_shared<AtomDistribution>(dist);
    d.trunc_radius_ = K;
    d.trunc_shift_ = Complex(0, 0);
    d.trunc_scale_ = 1.0;
    d.trunc_accept_ = 1.0;
    d.support_ = dist.support();
    d.probs_ = dist.probs();
    d.name_ = "truncated:K=" + std::to_string(K) + ":base=" + dist.name();
    return d;
  }

  AtomDistribution d;
  d.kind_ = Kind::Truncated;
  d.is_real_ = dist.is_real();
  d.base_ = std::make_shared<AtomDistribution>(dist);
  d.trunc_radius_ = K;
  std::ostringstream name;
  name << "truncated:K=" << K << ":base=" << dist.name();
  d.name_ = name.str();

  switch (dist.kind()) {
    case Kind::Discrete: {
      std::vector<Complex> pts;
      std::vector<double> pr;
      double mass = 0.0;
      for (std::size_t i = 0; i < dist.support().size(); ++i)
        if (std::abs(dist.support()[i]) <= K) {
          pts.push_back(dist.support()[i]);
          pr.push_back(dist.probs()[i]);
          mass += dist.probs()[i];
        }
      if (mass < 0.5)
        throw std::runtime_error("truncate_standardize: P(|z| <= K) < 1/2, truncation refused");
      Complex mean(0, 0);
      for (std::size_t i = 0; i < pts.size(); ++i) mean += pr[i] / mass * pts[i];
      double var = 0.0;
      for (std::size_t i = 0; i < pts.size(); ++i) var += pr[i] / mass * std::norm(pts[i] - mean);
      const double scale = 1.0 / std::sqrt(var);
      d.trunc_shift_ = mean;
      d.trunc_scale_ = scale;
      d.trunc_accept_ = mass;
      d.support_.reserve(pts.size());
      d.probs_.reserve(pts.size());
      for (std::size_t i = 0; i < pts.size(); ++i) {
        d.support_.push_back((pts[i] - mean) * scale);
        d.probs_.push_back(pr[i] / mass);
      }
      break;
    }
    case Kind::RealGaussian: {
      const auto t = truncated_normal_partials(-K, K, 2);
      d.trunc_shift_ = Complex(0, 0);
      d.trunc_scale_ = 1.0 / std::sqrt(t[2] / t[0]);
      d.trunc_accept_ = t[0];
      break;
    }
    case Kind::ComplexGaussian: {
      const double T = K * K;
      const double mass = 1.0 - std::exp(-T);
      const double var = lower_gamma_int(1, T) / mass;
      d.trunc_shift_ = Complex(0, 0);
      d.trunc_scale_ = 1.0 / std::sqrt(var);
      d.trunc_accept_ = mass;
      break;
    }
    case Kind::GaussDivisible: {
      if (dist.base().kind() != Kind::Discrete)
        throw std::runtime_error("truncate_standardize: unsupported gauss-divisible base");
      if (dist.is_real()) {
        // Closed-form gaussian-mixture branches; conditioned moments come from
        // conditioned_raw_moment at evaluation time.
        double mass = 0.0;
        const double sd = std::sqrt(dist.mixing_weight());
        const double c1 = std::sqrt(1.0 - dist.mixing_weight());
        const AtomDistribution& inner = dist.base();
        for (std::size_t k = 0; k < inner.support().size(); ++k) {
          const double c = c1 * inner.support()[k].real();
          mass += inner.probs()[k] *
                  (normal_cdf((K - c) / sd) - normal_cdf((-K - c) / sd));
        }
        if (mass < 0.5)
          throw std::runtime_error("truncate_standardize: P(|z| <= K) < 1/2, truncation refused");
        d.trunc_accept_ = mass;
        d.trunc_shift_ = Complex(0, 0);
        d.trunc_scale_ = 1.0;
        const double mean = d.conditioned_raw_moment(1, 0);
        d.trunc_shift_ = Complex(mean, 0);
        const double second = d.conditioned_raw_moment(2, 0);
        d.trunc_scale_ = 1.0 / std::sqrt(second - mean * mean);
      } else {
        // Complex gaussian-mixture over the disk |z| <= K: polar quadrature
        // discretization (radial Gauss-Legendre x angular trapezoid).
        const int nr = 256, na = 512;
        std::vector<double> gx, gw;
        gauss_legendre(nr, gx, gw);
        const AtomDistribution& inner = dist.base();
        const double t = dist.mixing_weight();
        const double c1 = std::sqrt(1.0 - t);
        std::vector<Complex> pts;
        std::vector<double> wts;
        pts.reserve(static_cast<std::size_t>(nr) * na);
        wts.reserve(static_cast<std::size_t>(nr) * na);
        for (int i = 0; i < nr; ++i) {
          const double r = 0.5 * K * (gx[i] + 1.0);
          const double wr = 0.5 * K * gw[i];
          for (int j = 0; j < na; ++j) {
            const double th = 2.0 * kPi * j / na;
            const Complex z(r * std::cos(th), r * std::sin(th));
            double dens = 0.0;
            for (std::size_t k = 0; k < inner.support().size(); ++k) {
              const Complex c = c1 * inner.support()[k];
              dens += inner.probs()[k] * std::exp(-std::norm(z - c) / t) / (kPi * t);
            }
            pts.push_back(z);
            wts.push_back(wr * (2.0 * kPi / na) * r * dens);
          }
        }
        const double mass = sum_or_zero(wts);
        if (mass < 0.5)
          throw std::runtime_error("truncate_standardize: P(|z| <= K) < 1/2, truncation refused");
        Complex mean(0, 0);
        for (std::size_t i = 0; i < pts.size(); ++i) mean += wts[i] / mass * pts[i];
        double var = 0.0;
        for (std::size_t i = 0; i < pts.size(); ++i)
          var += wts[i] / mass * std::norm(pts[i] - mean);
        const double scale = 1.0 / std::sqrt(var);
        d.trunc_accept_ = mass;
        d.trunc_shift_ = mean;
        d.trunc_scale_ = scale;
        d.support_.reserve(pts.size());
        d.probs_.reserve(pts.size());
        for (std::size_t i = 0; i < pts.size(); ++i) {
          d.support_.push_back((pts[i] - mean) * scale);
          d.probs_.push_back(wts[i] / mass);
        }
      }
      break;
    }
    default:
      throw std::runtime_error("truncate_standardize: unsupported base kind");
  }

  const double bound = (K + std::abs(d.trunc_shift_)) * d.trunc_scale_;
  if (bound > 2.0 * K)
    throw std::runtime_error("truncate_standardize: standardized support exceeds 2K");
  return d;
}

// ---------------------------------------------------------------------------
// Third-order matching solver

namespace {

struct TargetMoments {
  double t20, t11, t02, t30, t21, t12, t03;
};

Eigen::VectorXd residuals(const TargetMoments& t, const Eigen::VectorXd& theta) {
  // theta = [x1..x4, y1..y4, w1..w4]; probabilities via softmax.
  Eigen::Vector4d p;
  const double wmax = theta.segment<4>(8).maxCoeff();
  for (int i = 0; i < 4; ++i) p[i] = std::exp(theta[8 + i] - wmax);
  p /= p.sum();

  auto mom = [&](int m, int l) {
    double s = 0.0;
    for (int i = 0; i < 4; ++i)
      s += p[i] * std::pow(theta[i], m) * std::pow(theta[4 + i], l);
    return s;
  };
  Eigen::VectorXd r(9);
  r << mom(1, 0), mom(0, 1), mom(2, 0) - t.t20, mom(1, 1) - t.t11, mom(0, 2) - t.t02,
      mom(3, 0) - t.t30, mom(2, 1) - t.t21, mom(1, 2) - t.t12, mom(0, 3) - t.t03;
  return r;
}

bool levenberg_solve(const TargetMoments& t, Eigen::VectorXd& theta, double* out_resid) {
  Eigen::VectorXd r = residuals(t, theta);
  double mu = 1e-3;
  for (int iter = 0; iter < 400; ++iter) {
    if (r.lpNorm<Eigen::Infinity>() < 1e-13) break;
    Eigen::MatrixXd J(9, 12);
    for (int j = 0; j < 12; ++j) {
      const double h = 1e-7 * std::max(1.0, std::abs(theta[j]));
      Eigen::VectorXd tp = theta;
      tp[j] += h;
      J.col(j) = (residuals(t, tp) - r) / h;
    }
    const Eigen::MatrixXd jtj = J.transpose() * J;
    const Eigen::VectorXd jtr = J.transpose() * r;
    bool stepped = false;
    for (int attempt = 0; attempt < 25; ++attempt) {
      Eigen::MatrixXd A = jtj;
      A.diagonal().array() += mu;
      const Eigen::VectorXd delta = A.ldlt().solve(-jtr);
      const Eigen::VectorXd cand = theta + delta;
      const Eigen::VectorXd rc = residuals(t, cand);
      if (rc.squaredNorm() < r.squaredNorm()) {
        theta = cand;
        r = rc;
        mu = std::max(mu * 0.4, 1e-14);
        stepped = true;
        break;
      }
      mu *= 2.5;
      if (mu > 1e10) break;
    }
    if (!stepped) break;
  }
  *out_resid = r.lpNorm<Eigen::Infinity>();
  return *out_resid < 1e-12;
}

}  // namespace

ThirdOrderSolution solve_third_order_match(const MomentTable& target) {
  if (target.order() < 3)
    throw std::invalid_argument("solve_third_order_match: target must be of order >= 3");
  if (std::abs(target.at(0, 0) - 1.0) > 1e-9 || std::abs(target.at(1, 0)) > 1e-9 ||
      std::abs(target.at(0, 1)) > 1e-9 ||
      std::abs(target.at(2, 0) + target.at(0, 2) - 1.0) > 1e-9)
    throw std::invalid_argument("solve_third_order_match: target is not standardized");

  const TargetMoments t{target.at(2, 0), target.at(1, 1), target.at(0, 2),
                        target.at(3, 0), target.at(2, 1), target.at(1, 2), target.at(0, 3)};

  const bool is_real_target = std::abs(t.t02) < 1e-12 && std::abs(t.t11) < 1e-12 &&
                              std::abs(t.t21) < 1e-12 && std::abs(t.t12) < 1e-12 &&
                              std::abs(t.t03) < 1e-12;
  if (is_real_target) {
    // Two-point law {a, -1/a}: matches mean 0, variance 1, and skew a - 1/a.
    const double s = t.t30;
    const double a = 0.5 * (s + std::sqrt(s * s + 4.0));
    const double pa = 1.0 / (1.0 + a * a);
    auto law = AtomDistribution::discrete({Complex(a, 0), Complex(-1.0 / a, 0)}, {pa, 1.0 - pa},
                                          "third-order-match");
    double residual = 0.0;
    for (int sdeg = 1; sdeg <= 3; ++sdeg)
      for (int l = 0; l <= sdeg; ++l)
        residual = std::max(residual,
                            std::abs(law.mixed_moment(sdeg - l, l) - target.at(sdeg - l, l)));
    if (residual > 1e-9)
      throw MatchSolveError("solve_third_order_match: closed form residual too large", residual);
    return {std::move(law), residual, std::max(a, 1.0 / a)};
  }

  std::mt19937_64 engine(0x5eedULL);
  auto urand = [&] { return (engine() >> 11) * 0x1.0p-53 * 2.0 - 1.0; };
  const double reach = 1.0 + std::max({std::abs(t.t30), std::abs(t.t21), std::abs(t.t12),
                                       std::abs(t.t03)});
  double best_resid = std::numeric_limits<double>::infinity();

  for (int restart = 0; restart < 80; ++restart) {
    Eigen::VectorXd theta(12);
    const double rho = (0.8 + 0.35 * (restart % 4)) * std::min(reach, 4.0);
    const double h = rho / std::numbers::sqrt2;
    theta << h, h, -h, -h, h, -h, h, -h, 0, 0, 0, 0;
    for (int j = 0; j < 8; ++j) theta[j] += 0.4 * rho * urand();
    for (int j = 8; j < 12; ++j) theta[j] = 0.3 * urand();

    double resid = 0.0;
    if (!levenberg_solve(t, theta, &resid)) {
      best_resid = std::min(best_resid, resid);
      continue;
    }

    std::vector<Complex> pts;
    std::vector<double> pr;
    Eigen::Vector4d p;
    const double wmax = theta.segment<4>(8).maxCoeff();
    for (int i = 0; i < 4; ++i) p[i] = std::exp(theta[8 + i] - wmax);
    p /= p.sum();
    double radius = 0.0;
    for (int i = 0; i < 4; ++i) {
      if (p[i] < 1e-13) continue;
      pts.emplace_back(theta[i], theta[4 + i]);
      pr.push_back(p[i]);
      radius = std::max(radius, std::abs(pts.back()));
    }
    if (radius > 20.0) {
      best_resid = std::min(best_resid, resid);
      continue;
    }
    double psum = 0.0;
    for (double q : pr) psum += q;
    for (double& q : pr) q /= psum;

    try {
      auto law = AtomDistribution::discrete(pts, pr, "third-order-match");
      double residual = 0.0;
      for (int sdeg = 1; sdeg <= 3; ++sdeg)
        for (int l = 0; l <= sdeg; ++l)
          residual = std::max(residual,
                              std::abs(law.mixed_moment(sdeg - l, l) - target.at(sdeg - l, l)));
      if (residual <= 1e-9) return {std::move(law), residual, radius};
      best_resid = std::min(best_resid, residual);
    } catch (const std::invalid_argument&) {
      best_resid = std::min(best_resid, resid);
    }
  }
  throw MatchSolveError("solve_third_order_match: constrained search failed", best_resid);
}

// ---------------------------------------------------------------------------
// Catalog

namespace {

const std::vector<std::string> kFixedNames = {
    "rademacher",      "complex-bernoulli", "three-point",        "complex-three-point",
    "heavy-three-point", "heavy-gauss-partner", "real-gaussian",  "complex-gaussian",
};

double parse_double_field(std::string_view text, std::string_view field) {
  try {
    return std::stod(std::string(text));
  } catch (...) {
    throw std::invalid_argument("atom name: bad value for '" + std::string(field) + "'");
  }
}

}  // namespace

AtomDistribution from_name(std::string_view name) {
  if (name == "rademacher") return AtomDistribution::rademacher();
  if (name == "complex-bernoulli") return AtomDistribution::complex_bernoulli();
  if (name == "three-point") return AtomDistribution::three_point();
  if (name == "complex-three-point") return AtomDistribution::complex_three_point();
  if (name == "heavy-three-point") return AtomDistribution::heavy_three_point();
  if (name == "heavy-gauss-partner") return AtomDistribution::heavy_gauss_partner();
  if (name == "real-gaussian" || name == "gaussian") return AtomDistribution::real_gaussian();
  if (name == "complex-gaussian") return AtomDistribution::complex_gaussian();

  // Combinators: "<kind>:<param>=<v>:base=<rest>", base consumes the remainder
  // so bases may themselves be combinators.
  constexpr std::string_view kGd = "gauss-divisible:t=";
  constexpr std::string_view kTr = "truncated:K=";
  for (const auto& [prefix, is_gd] : {std::pair{kGd, true}, std::pair{kTr, false}}) {
    if (name.substr(0, prefix.size()) != prefix) continue;
    const std::string_view rest = name.substr(prefix.size());
    const std::size_t sep = rest.find(":base=");
    if (sep == std::string_view::npos)
      throw std::invalid_argument("atom name: missing ':base=' in '" + std::string(name) + "'");
    const double value = parse_double_field(rest.substr(0, sep), is_gd ? "t" : "K");
    const AtomDistribution base = from_name(rest.substr(sep + 6));
    return is_gd ? gauss_divisible_mix(base, value) : truncate_standardize(base, value);
  }
  throw std::invalid_argument("unknown atom name: '" + std::string(name) + "'");
}

std::vector<std::string> catalog_names() {
  std::vector<std::string> names = kFixedNames;
  names.push_back("gauss-divisible:t=<t>:base=<name>");
  names.push_back("truncated:K=<K>:base=<name>");
  return names;
}

}  // namespace rmtlab::atoms
