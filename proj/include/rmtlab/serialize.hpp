#pragma once

#include <string>

#include <json.hpp>

#include "rmtlab/spectral.hpp"
#include "rmtlab/stats.hpp"

namespace rmtlab::serialize {

nlohmann::ordered_json to_json(const stats::GapReport& rep);
nlohmann::ordered_json to_json(const stats::CorrelationEstimate& est);

// One row per entry: i, j, re, im.
void write_matrix_csv(const std::string& path, const Eigen::MatrixXcd& m);

// One row per index: index, sigma, lambda.
void write_spectrum_csv(const std::string& path, const stats::SpectrumSample& s);

// Bin table: center[, center2], estimate, std_error[, prediction].
void write_correlation_csv(const std::string& path, const stats::CorrelationEstimate& est,
                           const std::vector<double>* prediction = nullptr);

// Density/CDF table: x, pdf, cdf.
void write_mp_table_csv(const std::string& path, double y, int points, double lo, double hi);

}  // namespace rmtlab::serialize
