#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include <Eigen/Dense>

namespace rmtlab::harness {

inline constexpr std::string_view kLibraryVersion = "0.1.0";
inline constexpr std::string_view kConfigSchema = "rmtlab-config/1";
inline constexpr std::string_view kReportSchema = "rmtlab-report/1";

// Config errors carry the offending field path.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& field, const std::string& message)
      : std::runtime_error("config field '" + field + "': " + message), field_(field) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

// Flat key = value experiment description ('#' starts a comment).
class ExperimentConfig {
 public:
  static ExperimentConfig parse_file(const std::string& path);
  static ExperimentConfig parse_text(const std::string& text);

  bool has(const std::string& key) const;
  std::string get_string(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  std::int64_t get_int(const std::string& key) const;
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
  double get_double(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  std::uint64_t get_seed(const std::string& key, std::uint64_t fallback) const;
  std::vector<std::int64_t> get_int_list(const std::string& key) const;

  const std::map<std::string, std::string>& fields() const { return fields_; }

  // Sorted key = value rendering; the content that is hashed.
  std::string canonical_text() const;

 private:
  std::map<std::string, std::string> fields_;
};

// SHA-1 of a git-style blob ("blob <size>\0<content>").
std::string git_blob_hash(std::string_view content);

struct RunReport {
  nlohmann::ordered_json json;
  bool pass = false;
};

// Dispatches to the named experiment; throws ConfigError for bad configs.
RunReport run_experiment(const ExperimentConfig& config);

void write_report(const RunReport& report, const std::string& path);

// Deterministic parallel loop over trial indices. Results must be written to
// per-index slots; aggregation order is then independent of scheduling.
// Worker exceptions are rethrown with the trial index prefixed. Thread count
// honors RMT_THREADS (default: hardware parallelism).
void parallel_trials(long trials, const std::function<void(long)>& body);
int thread_count();

// Per-ensemble sample builders shared by experiments and the acceptance suite.

// trials x indices.size() matrix of n * lambda_{index} draws; ensemble_tag
// separates seed streams of different ensembles under one master seed.
Eigen::MatrixXd sample_scaled_eigenvalues(const std::string& atom_name, int p, int n,
                                          const std::vector<int>& indices_one_based, long trials,
                                          std::uint64_t master_seed, std::uint64_t ensemble_tag);

// CLI entry point (subcommands: run, catalog, mp, identities, report).
// Exit codes: 0 pass, 1 threshold failure, 2 usage error.
int cli_main(const std::vector<std::string>& args);

}  // namespace rmtlab::harness
