#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "rmtlab/harness.hpp"
#include "rmtlab/serialize.hpp"

using namespace rmtlab;
namespace fs = std::filesystem;

namespace {

std::string scratch_path(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "rmtlab_tests";
  fs::create_directories(dir);
  return (dir / name).string();
}

nlohmann::ordered_json strip_time(nlohmann::ordered_json j) {
  j.erase("wall_time_s");
  return j;
}

}  // namespace

TEST_CASE("config parsing: happy path and field errors") {
  const auto cfg = harness::ExperimentConfig::parse_text(
      "# comment\n"
      "experiment = mp-test\n"
      "p = 40\n"
      "n = 40   # trailing comment\n"
      "trials = 2\n"
      "master_seed = 7\n");
  CHECK(cfg.get_string("experiment") == "mp-test");
  CHECK(cfg.get_int("p") == 40);
  CHECK(cfg.get_seed("master_seed", 0) == 7);
  CHECK(cfg.get_double("missing", 1.5) == 1.5);
  CHECK_THROWS_AS(cfg.get_string("nope"), harness::ConfigError);
  CHECK_THROWS_AS(cfg.get_double("experiment"), harness::ConfigError);

  CHECK_THROWS_AS(harness::ExperimentConfig::parse_text("p = 1\n"), harness::ConfigError);
  CHECK_THROWS_AS(harness::ExperimentConfig::parse_text("experiment = x\nbad line\n"),
                  harness::ConfigError);
  CHECK_THROWS_AS(harness::ExperimentConfig::parse_text("experiment = x\np = 1\np = 2\n"),
                  harness::ConfigError);
  CHECK_THROWS_AS(harness::ExperimentConfig::parse_file("/no/such/file.conf"),
                  harness::ConfigError);
}

TEST_CASE("git-style blob hash matches the reference value") {
  // Classic fixtures, verifiable with `git hash-object`.
  CHECK(harness::git_blob_hash("") == "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391");
  CHECK(harness::git_blob_hash("hello\n") == "ce013625030ba8dba906f756967f9e9ca394464a");
}

TEST_CASE("seed derivation is injective over a large index range") {
  std::set<std::uint64_t> seen;
  for (std::uint64_t i = 0; i < 100000; ++i) seen.insert(derive_seed(42, i));
  CHECK(seen.size() == 100000);
  CHECK(derive_seed(1, 5) != derive_seed(2, 5));
}

TEST_CASE("experiments rerun bit-identically for a fixed config") {
  const auto cfg = harness::ExperimentConfig::parse_text(
      "experiment = mp-test\natom = complex-gaussian\np = 60\nn = 60\ntrials = 3\n"
      "master_seed = 31415\n");
  const auto a = harness::run_experiment(cfg);
  const auto b = harness::run_experiment(cfg);
  CHECK(strip_time(a.json).dump() == strip_time(b.json).dump());
  CHECK(a.json["config_hash"] == b.json["config_hash"]);
}

TEST_CASE("aggregates are identical across thread counts") {
  const auto cfg = harness::ExperimentConfig::parse_text(
      "experiment = mp-test\natom = rademacher\np = 50\nn = 50\ntrials = 4\nmaster_seed = 9\n");
  setenv("RMT_THREADS", "1", 1);
  const auto serial = harness::run_experiment(cfg);
  setenv("RMT_THREADS", "2", 1);
  const auto parallel = harness::run_experiment(cfg);
  unsetenv("RMT_THREADS");
  CHECK(strip_time(serial.json).dump() == strip_time(parallel.json).dump());
}

TEST_CASE("trial failures carry the trial index") {
  try {
    harness::parallel_trials(8, [](long t) {
      if (t == 5) throw std::runtime_error("boom");
    });
    FAIL("expected an exception");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find("trial 5") != std::string::npos);
  }
}

TEST_CASE("identities experiment runs clean at small dims") {
  const auto cfg = harness::ExperimentConfig::parse_text(
      "experiment = identities\nseeds = 40\ndims = 3x5,4x4\nmaster_seed = 12\n");
  const auto rep = harness::run_experiment(cfg);
  CHECK(rep.pass);
  CHECK(rep.json["aggregates"]["max_residual"].get<double>() < 1e-8);
}

TEST_CASE("projection experiment thresholds") {
  const auto cfg = harness::ExperimentConfig::parse_text(
      "experiment = projection\nn = 300\nsubspace_dim = 20\ntrials = 150\n"
      "atom = rademacher\nmaster_seed = 77\nmean_sq_lo = 18\nmean_sq_hi = 22\n");
  const auto rep = harness::run_experiment(cfg);
  CHECK(rep.pass);
}

TEST_CASE("unknown experiment and bad atom are config errors") {
  CHECK_THROWS_AS(
      harness::run_experiment(harness::ExperimentConfig::parse_text("experiment = nope\n")),
      harness::ConfigError);
  const auto cfg = harness::ExperimentConfig::parse_text(
      "experiment = mp-test\natom = not-an-atom\np = 10\nn = 10\ntrials = 1\n");
  CHECK_THROWS_AS(harness::run_experiment(cfg), std::invalid_argument);
}

TEST_CASE("report writing and the cli round trip") {
  const std::string conf_path = scratch_path("mini.conf");
  const std::string out_path = scratch_path("mini.json");
  {
    std::ofstream out(conf_path);
    out << "experiment = mp-test\natom = complex-gaussian\np = 50\nn = 50\ntrials = 1\n"
        << "master_seed = 4\nout = " << out_path << "\n";
  }

  CHECK(harness::cli_main({"run", conf_path}) == 0);
  REQUIRE(fs::exists(out_path));
  nlohmann::ordered_json j;
  std::ifstream(out_path) >> j;
  CHECK(j["schema"] == "rmtlab-report/1");
  CHECK(j["experiment"] == "mp-test");
  CHECK(j["config_hash"].get<std::string>().size() == 40);
  CHECK(j.contains("aggregates"));

  CHECK(harness::cli_main({"report", "show", out_path}) == 0);
  CHECK(harness::cli_main({"run", "missing.conf"}) == 2);
  CHECK(harness::cli_main({"definitely-not-a-command"}) == 2);
  CHECK(harness::cli_main({"catalog"}) == 0);
}

TEST_CASE("cli mp table emits the frozen density value") {
  const std::string path = scratch_path("mp_table.csv");
  CHECK(harness::cli_main({"mp", "table", "--y", "1", "--out", path, "--points", "2001"}) == 0);
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  CHECK(line == "x,pdf,cdf");
  double best_dx = 1e9, pdf_at_2 = 0.0;
  while (std::getline(in, line)) {
    std::istringstream row(line);
    std::string x, pdf, cdf;
    std::getline(row, x, ',');
    std::getline(row, pdf, ',');
    std::getline(row, cdf, ',');
    const double dx = std::abs(std::stod(x) - 2.0);
    if (dx < best_dx) {
      best_dx = dx;
      pdf_at_2 = std::stod(pdf);
    }
  }
  CHECK(best_dx < 2e-3);
  CHECK(std::abs(pdf_at_2 - 0.159154) < 1e-3);
}

TEST_CASE("serialization helpers produce the documented shapes") {
  // Spectrum CSV.
  const auto m = spectral::generate_matrix(4, 4, atoms::AtomDistribution::complex_gaussian(), 3);
  const auto sample = stats::make_sample(m);
  const std::string spec_path = scratch_path("spectrum.csv");
  serialize::write_spectrum_csv(spec_path, sample);
  std::ifstream in(spec_path);
  std::string header;
  std::getline(in, header);
  CHECK(header == "index,sigma,lambda");
  int rows = 0;
  std::string line;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 4);

  // Matrix CSV.
  const std::string mat_path = scratch_path("matrix.csv");
  serialize::write_matrix_csv(mat_path, m.entries);
  std::ifstream min(mat_path);
  std::getline(min, header);
  CHECK(header == "i,j,re,im");

  // Gap report JSON: infinity sentinel appears as a string.
  Eigen::MatrixXcd twin = Eigen::MatrixXcd::Zero(2, 2);
  twin(0, 0) = 2.0;
  twin(1, 1) = 2.0;
  const auto rep = stats::gap_report(spectral::DataMatrix{twin}, 0.2, 0.5, 10.0, {1});
  const auto j = serialize::to_json(rep);
  CHECK(j["q"][0]["value"] == "infinity");
  CHECK(j.contains("min_bulk_gap"));
}
