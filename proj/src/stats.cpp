#include "rmtlab/stats.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace rmtlab::stats {

namespace {

constexpr double kPi = std::numbers::pi;

double nan_value() { return std::numeric_limits<double>::quiet_NaN(); }

}  // namespace

SpectrumSample make_sample(const spectral::DataMatrix& m) {
  SpectrumSample s;
  s.lambda = spectral::covariance_eigenvalues(m);
  s.n = m.n();
  s.p = m.p();
  s.y = m.aspect_ratio();
  s.atom_name = m.atom_name;
  s.seed = m.seed;
  s.sigma.resize(s.lambda.size());
  for (long i = 0; i < s.lambda.size(); ++i) s.sigma[i] = std::sqrt(s.n * s.lambda[i]);
  return s;
}

BulkIndices bulk_indices(int p, double eps) {
  if (!(eps > 0.0) || eps >= 1.0) throw std::invalid_argument("bulk_indices: eps in (0, 1)");
  BulkIndices b;
  b.lo = std::max(1, static_cast<int>(std::ceil(eps * p)));
  b.hi = std::min(p, static_cast<int>(std::floor((1.0 - eps) * p)));
  return b;
}

int count_interval(const SpectrumSample& s, double lo, double hi) {
  if (lo > hi) throw std::invalid_argument("count_interval: lo > hi");
  int c = 0;
  for (long i = 0; i < s.lambda.size(); ++i)
    if (s.lambda[i] >= lo && s.lambda[i] <= hi) ++c;
  return c;
}

ConcentrationResult concentration_test(const SpectrumSample& s, double lo, double hi,
                                       const mp::MPModel& model, double eps) {
  if (lo > hi) throw std::invalid_argument("concentration_test: lo > hi");
  if (lo < model.a + eps || hi > model.b - eps)
    throw std::invalid_argument("concentration_test: interval outside the bulk window");
  ConcentrationResult r;
  r.count = count_interval(s, lo, hi);
  r.expected = s.p * (mp::mp_cdf(hi, model.y) - mp::mp_cdf(lo, model.y));
  r.deviation = std::abs(r.count - r.expected);
  r.ratio = r.deviation / s.p;
  return r;
}

BulkContainment bulk_containment(const SpectrumSample& s, double eps) {
  if (!(eps > 0.0) || eps >= 1.0) throw std::invalid_argument("bulk_containment: eps in (0, 1)");
  if (eps >= 0.5)  // index range empty: vacuous containment
    return {true, std::numeric_limits<double>::infinity()};
  const auto [a, b] = mp::mp_edges(s.y);
  const BulkIndices w = bulk_indices(s.p, eps);
  if (w.empty()) return {true, std::numeric_limits<double>::infinity()};
  const double lo = s.lambda[w.lo - 1];
  const double hi = s.lambda[w.hi - 1];
  BulkContainment out;
  out.margin = std::min(lo - a, b - hi);
  out.contained = out.margin > 0.0;
  return out;
}

DelocalizationStat delocalization_stat(const spectral::SpectralDecomposition& d,
                                       const mp::MPModel& model, double eps, int n) {
  DelocalizationStat out;
  double sup = 0.0;
  for (long i = 0; i < d.lambda.size(); ++i) {
    if (d.lambda[i] < model.a + eps || d.lambda[i] > model.b - eps) continue;
    ++out.vectors_in_window;
    sup = std::max({sup, d.right.col(i).cwiseAbs().maxCoeff(),
                    d.left.col(i).cwiseAbs().maxCoeff()});
  }
  if (out.vectors_in_window == 0) {
    out.sup_coordinate = nan_value();
    out.normalized = nan_value();
    return out;
  }
  out.sup_coordinate = sup;
  out.normalized = sup * std::sqrt(static_cast<double>(n));
  return out;
}

double q_statistic(const Eigen::VectorXd& sigma, int n, int i) {
  const int p = static_cast<int>(sigma.size());
  if (i < 1 || i > p) throw std::invalid_argument("q_statistic: index range");
  const double si = sigma[i - 1];
  const double top = sigma[p - 1];
  const double degeneracy = 1e-12 * std::max(top, 1e-300);

  double sum = 0.0;
  for (int j = 1; j <= p; ++j) {
    if (j == i) continue;
    const double gap = std::abs(sigma[j - 1] - si);
    if (gap < degeneracy) return kInfiniteGap;
    sum += 1.0 / (gap * gap);
  }
  if (si <= 0.0) return kInfiniteGap;
  sum += static_cast<double>(n - p) / (si * si);
  for (int j = 1; j <= p; ++j) {
    const double s = sigma[j - 1] + si;
    sum += 1.0 / (s * s);
  }
  return sum / n;
}

GapReport gap_report(const spectral::DataMatrix& m, double eps, double c, double c1,
                     const std::vector<int>& q_indices,
                     const std::vector<RegularizedGapRequest>& regularized) {
  const int p0 = m.p(), n = m.n();
  const Eigen::VectorXd sigma = spectral::singular_values(m);
  Eigen::VectorXd lambda(sigma.size());
  for (long i = 0; i < sigma.size(); ++i) lambda[i] = sigma[i] * sigma[i] / n;

  GapReport rep;
  rep.eps = eps;
  rep.c = c;
  rep.threshold = std::pow(static_cast<double>(n), -1.0 - c);

  const BulkIndices w = bulk_indices(p0, eps);
  double min_gap = std::numeric_limits<double>::infinity();
  for (int i = std::max(w.lo, 1); i <= std::min(w.hi, p0 - 1); ++i)
    min_gap = std::min(min_gap, lambda[i] - lambda[i - 1]);
  rep.min_bulk_gap = min_gap;
  rep.gap_property_holds = min_gap >= rep.threshold;

  rep.q_indices = q_indices;
  for (int i : q_indices) {
    if (i < w.lo || i > w.hi)
      throw std::invalid_argument("gap_report: Q index outside the bulk window");
    rep.q_values.push_back(q_statistic(sigma, n, i));
  }

  const double n0 = static_cast<double>(p0 + n);
  const double exponent = std::pow(std::log(n0), 0.9);
  const double cap = std::pow(std::log(n0), c1);
  for (const RegularizedGapRequest& req : regularized) {
    const int pr = (req.p == 0) ? p0 : req.p;
    if (pr < 1 || pr > p0) throw std::invalid_argument("gap_report: regularized p out of range");
    if (req.l < 1 || req.i0 - req.l < 1 || req.i0 > pr)
      throw std::invalid_argument("gap_report: regularized (i0, l) out of range");
    const Eigen::VectorXd ms =
        (pr == p0) ? sigma : spectral::singular_values(spectral::DataMatrix{
                                 m.entries.topRows(pr), m.transposed, m.atom_name, m.seed});
    double best = std::numeric_limits<double>::infinity();
    for (int im = 1; im <= req.i0 - req.l; ++im)
      for (int ip = req.i0; ip <= pr; ++ip) {
        const double span = std::sqrt(n0) * (ms[ip - 1] - ms[im - 1]);
        const double denom = std::pow(std::min(static_cast<double>(ip - im), cap), exponent);
        best = std::min(best, span / denom);
      }
    rep.regularized.push_back({req.i0, req.l, pr, c1, best});
  }
  return rep;
}

double sine_kernel(double x, double y) {
  const double d = x - y;
  if (d == 0.0) return 1.0;
  return std::sin(kPi * d) / (kPi * d);
}

double sine_det_prediction(std::span<const double> alpha) {
  const int k = static_cast<int>(alpha.size());
  if (k == 0) throw std::invalid_argument("sine_det_prediction: empty tuple");
  Eigen::MatrixXd kmat(k, k);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) kmat(i, j) = sine_kernel(alpha[i], alpha[j]);
  return kmat.determinant();
}

// ---------------------------------------------------------------------------
// Correlation estimators

namespace {

struct RescaleWindow {
  std::vector<double> alpha;  // rescaled coordinates inside the working window
};

// Rescaled coordinates alpha = scale * (lambda - u0) for lambda in
// [u0 + lo / scale, u0 + hi / scale], via binary search on the ascending list.
RescaleWindow rescale_window(const Eigen::VectorXd& lambda, double u0, double scale, double lo,
                             double hi) {
  RescaleWindow w;
  const double* begin = lambda.data();
  const double* end = lambda.data() + lambda.size();
  const double* it = std::lower_bound(begin, end, u0 + lo / scale);
  for (; it != end; ++it) {
    const double a = scale * (*it - u0);
    if (a > hi) break;
    w.alpha.push_back(a);
  }
  return w;
}

void check_correlation_inputs(const std::vector<SpectrumSample>& samples, int k, double u,
                              double y) {
  if (k < 1 || k > 3) throw std::invalid_argument("correlation: k must be 1, 2, or 3");
  if (samples.size() < 100)
    throw std::invalid_argument("correlation: insufficient samples (need >= 100)");
  const auto [a, b] = mp::mp_edges(y);
  if (!(u > a) || !(u < b)) throw std::invalid_argument("correlation: u outside the bulk (a, b)");
  for (const auto& s : samples)
    if (s.n != samples.front().n || s.p != samples.front().p)
      throw std::invalid_argument("correlation: samples must share dimensions");
}

// Accumulates per-trial bin counts for one sample at one rescaling center.
void accumulate_counts(const RescaleWindow& w, int k, const BinGrid& grid, double ref_halfwidth,
                       double weight, std::vector<double>& counts) {
  const double h = grid.width();
  const int nb = grid.count;
  auto bin_of = [&](double x) -> int {
    if (x < grid.lo || x >= grid.hi) return -1;
    const int b = static_cast<int>((x - grid.lo) / h);
    return std::min(b, nb - 1);
  };
  const auto& a = w.alpha;
  const std::size_t m = a.size();
  if (k == 1) {
    for (std::size_t i = 0; i < m; ++i) {
      const int b = bin_of(a[i]);
      if (b >= 0) counts[b] += weight;
    }
    return;
  }
  if (k == 2) {
    for (std::size_t i = 0; i < m; ++i) {
      if (std::abs(a[i]) > ref_halfwidth) continue;
      for (std::size_t j = 0; j < m; ++j) {
        if (j == i) continue;
        const int b = bin_of(a[j] - a[i]);
        if (b >= 0) counts[b] += weight;
      }
    }
    return;
  }
  for (std::size_t i = 0; i < m; ++i) {
    if (std::abs(a[i]) > ref_halfwidth) continue;
    for (std::size_t j = 0; j < m; ++j) {
      if (j == i) continue;
      const int bj = bin_of(a[j] - a[i]);
      if (bj < 0) continue;
      for (std::size_t l = 0; l < m; ++l) {
        if (l == i || l == j) continue;
        const int bl = bin_of(a[l] - a[i]);
        if (bl >= 0) counts[static_cast<std::size_t>(bj) * nb + bl] += weight;
      }
    }
  }
}

CorrelationEstimate finalize_estimate(std::vector<std::vector<double>> per_trial, int k, double u,
                                      double eps, const BinGrid& grid, double ref_halfwidth) {
  CorrelationEstimate est;
  est.k = k;
  est.u = u;
  est.eps = eps;
  est.ref_halfwidth = ref_halfwidth;
  est.grid = grid;
  est.trials = static_cast<long>(per_trial.size());

  const double h = grid.width();
  double norm = h;
  if (k >= 2) norm *= 2.0 * ref_halfwidth;
  if (k == 3) norm *= h;

  const std::size_t nbins = per_trial.front().size();
  est.estimate.assign(nbins, 0.0);
  est.std_error.assign(nbins, 0.0);
  for (const auto& row : per_trial)
    for (std::size_t b = 0; b < nbins; ++b) est.estimate[b] += row[b];
  const double t = static_cast<double>(est.trials);
  for (std::size_t b = 0; b < nbins; ++b) est.estimate[b] /= t;
  for (const auto& row : per_trial)
    for (std::size_t b = 0; b < nbins; ++b) {
      const double d = row[b] - est.estimate[b];
      est.std_error[b] += d * d;
    }
  for (std::size_t b = 0; b < nbins; ++b) {
    est.std_error[b] = std::sqrt(est.std_error[b] / (t * (t - 1.0))) / norm;
    est.estimate[b] /= norm;
  }

  for (int i = 0; i < grid.count; ++i) est.center.push_back(grid.center(i));
  if (k == 3)
    for (int i = 0; i < grid.count; ++i) est.center2.push_back(grid.center(i));
  return est;
}

}  // namespace

CorrelationEstimate kpoint_correlation(const std::vector<SpectrumSample>& samples, int k,
                                       double u, const BinGrid& grid, double ref_halfwidth) {
  const double y = samples.empty() ? 1.0 : samples.front().y;
  check_correlation_inputs(samples, k, u, y);
  const double rho = mp::mp_density(u, y);
  const std::size_t nbins =
      (k == 3) ? static_cast<std::size_t>(grid.count) * grid.count : grid.count;

  const double reach = (k == 1) ? std::max(std::abs(grid.lo), std::abs(grid.hi))
                                : ref_halfwidth + std::max(std::abs(grid.lo), std::abs(grid.hi));
  std::vector<std::vector<double>> per_trial;
  per_trial.reserve(samples.size());
  for (const auto& s : samples) {
    const double scale = s.n * rho;
    std::vector<double> counts(nbins, 0.0);
    const RescaleWindow w = rescale_window(s.lambda, u, scale, -reach - 1e-9, reach + 1e-9);
    accumulate_counts(w, k, grid, ref_halfwidth, 1.0, counts);
    per_trial.push_back(std::move(counts));
  }
  return finalize_estimate(std::move(per_trial), k, u, 0.0, grid, ref_halfwidth);
}

CorrelationEstimate averaged_correlation(const std::vector<SpectrumSample>& samples, int k,
                                         double u, double eps, const BinGrid& grid,
                                         double ref_halfwidth, int energy_nodes) {
  const double y = samples.empty() ? 1.0 : samples.front().y;
  check_correlation_inputs(samples, k, u, y);
  if (energy_nodes < 1) throw std::invalid_argument("averaged_correlation: energy_nodes >= 1");
  const auto [a, b] = mp::mp_edges(y);
  if (!(u - eps > a) || !(u + eps < b))
    throw std::invalid_argument("averaged_correlation: energy window escapes the bulk");

  const std::size_t nbins =
      (k == 3) ? static_cast<std::size_t>(grid.count) * grid.count : grid.count;
  const double reach = (k == 1) ? std::max(std::abs(grid.lo), std::abs(grid.hi))
                                : ref_halfwidth + std::max(std::abs(grid.lo), std::abs(grid.hi));
  const double weight = 1.0 / energy_nodes;

  std::vector<std::vector<double>> per_trial;
  per_trial.reserve(samples.size());
  for (const auto& s : samples) {
    std::vector<double> counts(nbins, 0.0);
    for (int j = 0; j < energy_nodes; ++j) {
      const double uj = u - eps + (2.0 * j + 1.0) * eps / energy_nodes;
      const double scale = s.n * mp::mp_density(uj, y);
      const RescaleWindow w = rescale_window(s.lambda, uj, scale, -reach - 1e-9, reach + 1e-9);
      accumulate_counts(w, k, grid, ref_halfwidth, weight, counts);
    }
    per_trial.push_back(std::move(counts));
  }
  return finalize_estimate(std::move(per_trial), k, u, eps, grid, ref_halfwidth);
}

std::vector<double> sine_prediction_for(const CorrelationEstimate& est, int bin_nodes) {
  const BinGrid& g = est.grid;
  const double h = g.width();
  std::vector<double> pred;
  auto bin_average = [&](auto&& f, double center) {
    double acc = 0.0;
    for (int q = 0; q < bin_nodes; ++q)
      acc += f(center - 0.5 * h + (q + 0.5) * h / bin_nodes);
    return acc / bin_nodes;
  };
  if (est.k == 1) {
    pred.assign(est.estimate.size(), 1.0);
  } else if (est.k == 2) {
    for (int i = 0; i < g.count; ++i)
      pred.push_back(bin_average(
          [](double d) {
            const std::array<double, 2> t{0.0, d};
            return sine_det_prediction(t);
          },
          g.center(i)));
  } else {
    for (int i = 0; i < g.count; ++i)
      for (int j = 0; j < g.count; ++j) {
        double acc = 0.0;
        for (int qi = 0; qi < bin_nodes; ++qi)
          for (int qj = 0; qj < bin_nodes; ++qj) {
            const std::array<double, 3> t{
                0.0, g.center(i) - 0.5 * h + (qi + 0.5) * h / bin_nodes,
                g.center(j) - 0.5 * h + (qj + 0.5) * h / bin_nodes};
            acc += sine_det_prediction(t);
          }
        pred.push_back(acc / (bin_nodes * bin_nodes));
      }
  }
  return pred;
}

// ---------------------------------------------------------------------------
// Test functions and the four-moment contrast

TestFunction::TestFunction(std::vector<double> centers, double width)
    : centers_(std::move(centers)), width_(width) {
  if (centers_.empty()) throw std::invalid_argument("TestFunction: arity must be >= 1");
  if (!(width_ > 0.0)) throw std::invalid_argument("TestFunction: width must be positive");

  // sup |He_m(t)| e^{-t^2/2} over t, by dense scan (the maximizers lie well
  // inside |t| <= 6 for m <= 5).
  for (int m = 0; m <= 5; ++m) {
    double best = 0.0;
    for (double t = 0.0; t <= 6.0; t += 1e-4) {
      double h0 = 1.0, h1 = t;
      double hm = (m == 0) ? 1.0 : h1;
      for (int j = 2; j <= m; ++j) {
        const double h2 = t * h1 - (j - 1) * h0;
        h0 = h1;
        h1 = h2;
        hm = h2;
      }
      if (m == 0) hm = 1.0;
      best = std::max(best, std::abs(hm) * std::exp(-0.5 * t * t));
    }
    factor_bounds_[static_cast<std::size_t>(m)] = best / std::pow(width_, m);
  }
}

double TestFunction::operator()(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != arity())
    throw std::invalid_argument("TestFunction: arity mismatch");
  double v = 1.0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    const double d = (x[j] - centers_[j]) / width_;
    v *= std::exp(-0.5 * d * d);
  }
  return v;
}

double TestFunction::derivative_bound(int order) const {
  if (order < 0 || order > 5)
    throw std::invalid_argument("TestFunction: certificate covers orders 0..5");
  // Max over multi-indices summing to `order` of the product of per-factor
  // sup bounds (each factor's zeroth bound is 1).
  const int k = arity();
  std::vector<double> best(static_cast<std::size_t>(order) + 1, 0.0);
  best[0] = 1.0;
  for (int f = 0; f < k; ++f) {
    std::vector<double> next(best.size(), 0.0);
    for (int used = 0; used <= order; ++used) {
      if (best[used] == 0.0) continue;
      for (int m = 0; m + used <= order; ++m)
        next[used + m] = std::max(next[used + m], best[used] * factor_bounds_[m]);
    }
    best = std::move(next);
  }
  return best[static_cast<std::size_t>(order)];
}

FourMomentResult four_moment_compare(const Eigen::MatrixXd& samples_a,
                                     const Eigen::MatrixXd& samples_b, const TestFunction& g) {
  if (samples_a.cols() != g.arity() || samples_b.cols() != g.arity())
    throw std::invalid_argument("four_moment_compare: sample arity mismatch");
  if (samples_a.rows() < 2 || samples_b.rows() < 2)
    throw std::invalid_argument("four_moment_compare: too few trials for a standard error");

  auto summarize = [&](const Eigen::MatrixXd& s, double* mean, double* se) {
    const long t = s.rows();
    std::vector<double> vals(static_cast<std::size_t>(t));
    std::vector<double> row(static_cast<std::size_t>(g.arity()));
    for (long i = 0; i < t; ++i) {
      for (int j = 0; j < g.arity(); ++j) row[static_cast<std::size_t>(j)] = s(i, j);
      vals[static_cast<std::size_t>(i)] = g(row);
    }
    double m = 0.0;
    for (double v : vals) m += v;
    m /= t;
    double var = 0.0;
    for (double v : vals) var += (v - m) * (v - m);
    var /= (t - 1.0);
    *mean = m;
    *se = std::sqrt(var / t);
  };

  FourMomentResult r;
  summarize(samples_a, &r.mean_a, &r.se_a);
  summarize(samples_b, &r.mean_b, &r.se_b);
  r.delta = std::abs(r.mean_a - r.mean_b);
  r.se_delta = std::sqrt(r.se_a * r.se_a + r.se_b * r.se_b);
  return r;
}

double eigen_upper_check(const SpectrumSample& s, const mp::MPModel& model, double eps) {
  const double lo = model.a + eps, hi = model.b - eps;
  if (lo >= hi) throw std::invalid_argument("eigen_upper_check: empty bulk window");
  const double min_len = std::log(static_cast<double>(s.n)) * std::log(static_cast<double>(s.n)) /
                         s.n;
  double max_ratio = 0.0;
  for (double len = min_len; len <= hi - lo; len *= 2.0) {
    for (double x = lo; x + len <= hi + 1e-12; x += 0.5 * len) {
      const int c = count_interval(s, x, std::min(x + len, hi));
      max_ratio = std::max(max_ratio, c / (s.n * len));
    }
  }
  return max_ratio;
}

}  // namespace rmtlab::stats
