#include "rmtlab/serialize.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <stdexcept>

#include "rmtlab/mp.hpp"

namespace rmtlab::serialize {

namespace {

std::ofstream open_csv(const std::string& path) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << std::setprecision(17);
  return out;
}

}  // namespace

nlohmann::ordered_json to_json(const stats::GapReport& rep) {
  nlohmann::ordered_json j;
  j["eps"] = rep.eps;
  j["c"] = rep.c;
  j["min_bulk_gap"] = rep.min_bulk_gap;
  j["threshold"] = rep.threshold;
  j["gap_property_holds"] = rep.gap_property_holds;
  j["q"] = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < rep.q_indices.size(); ++i) {
    const double q = rep.q_values[i];
    nlohmann::ordered_json item;
    item["index"] = rep.q_indices[i];
    if (std::isinf(q))
      item["value"] = "infinity";
    else
      item["value"] = q;
    j["q"].push_back(item);
  }
  j["regularized"] = nlohmann::ordered_json::array();
  for (const auto& r : rep.regularized)
    j["regularized"].push_back(
        {{"i0", r.i0}, {"l", r.l}, {"p", r.p}, {"C1", r.c1}, {"g", r.value}});
  return j;
}

nlohmann::ordered_json to_json(const stats::CorrelationEstimate& est) {
  nlohmann::ordered_json j;
  j["k"] = est.k;
  j["u"] = est.u;
  j["eps"] = est.eps;
  j["ref_halfwidth"] = est.ref_halfwidth;
  j["trials"] = est.trials;
  j["bin_width"] = est.grid.width();
  j["center"] = est.center;
  if (!est.center2.empty()) j["center2"] = est.center2;
  j["estimate"] = est.estimate;
  j["std_error"] = est.std_error;
  return j;
}

void write_matrix_csv(const std::string& path, const Eigen::MatrixXcd& m) {
  auto out = open_csv(path);
  out << "i,j,re,im\n";
  for (long i = 0; i < m.rows(); ++i)
    for (long j = 0; j < m.cols(); ++j)
      out << i << "," << j << "," << m(i, j).real() << "," << m(i, j).imag() << "\n";
}

void write_spectrum_csv(const std::string& path, const stats::SpectrumSample& s) {
  auto out = open_csv(path);
  out << "index,sigma,lambda\n";
  for (long i = 0; i < s.lambda.size(); ++i)
    out << (i + 1) << "," << s.sigma[i] << "," << s.lambda[i] << "\n";
}

void write_correlation_csv(const std::string& path, const stats::CorrelationEstimate& est,
                           const std::vector<double>* prediction) {
  auto out = open_csv(path);
  const bool grid2 = !est.center2.empty();
  out << (grid2 ? "center,center2,estimate,std_error" : "center,estimate,std_error");
  if (prediction) out << ",prediction";
  out << "\n";
  const std::size_t nb = est.estimate.size();
  for (std::size_t b = 0; b < nb; ++b) {
    if (grid2) {
      const std::size_t n2 = est.center2.size();
      out << est.center[b / n2] << "," << est.center2[b % n2];
    } else {
      out << est.center[b];
    }
    out << "," << est.estimate[b] << "," << est.std_error[b];
    if (prediction) out << "," << (*prediction)[b];
    out << "\n";
  }
}

void write_mp_table_csv(const std::string& path, double y, int points, double lo, double hi) {
  if (points < 2) throw std::invalid_argument("write_mp_table_csv: need >= 2 points");
  auto out = open_csv(path);
  out << "x,pdf,cdf\n";
  for (int i = 0; i < points; ++i) {
    const double x = lo + (hi - lo) * i / (points - 1);
    out << x << "," << mp::mp_density(x, y) << "," << mp::mp_cdf(x, y) << "\n";
  }
}

}  // namespace rmtlab::serialize
