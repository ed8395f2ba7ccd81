#include "rmtlab/harness.hpp"

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <sstream>
#include <thread>

#include "experiments.hpp"
#include "rmtlab/atoms.hpp"
#include "rmtlab/spectral.hpp"

namespace rmtlab::harness {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return "";
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

}  // namespace

ExperimentConfig ExperimentConfig::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path, "cannot open config file");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_text(buf.str());
}

ExperimentConfig ExperimentConfig::parse_text(const std::string& text) {
  ExperimentConfig cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno), "expected 'key = value'");
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    if (key.empty()) throw ConfigError("line " + std::to_string(lineno), "empty key");
    if (cfg.fields_.count(key)) throw ConfigError(key, "duplicate key");
    cfg.fields_[key] = value;
  }
  if (!cfg.fields_.count("experiment")) throw ConfigError("experiment", "missing required key");
  return cfg;
}

bool ExperimentConfig::has(const std::string& key) const { return fields_.count(key) > 0; }

std::string ExperimentConfig::get_string(const std::string& key) const {
  const auto it = fields_.find(key);
  if (it == fields_.end()) throw ConfigError(key, "missing required key");
  return it->second;
}

std::string ExperimentConfig::get_string(const std::string& key,
                                         const std::string& fallback) const {
  const auto it = fields_.find(key);
  return it == fields_.end() ? fallback : it->second;
}

std::int64_t ExperimentConfig::get_int(const std::string& key) const {
  const std::string v = get_string(key);
  try {
    std::size_t used = 0;
    const std::int64_t r = std::stoll(v, &used);
    if (used != v.size()) throw std::invalid_argument("");
    return r;
  } catch (...) {
    throw ConfigError(key, "expected integer, got '" + v + "'");
  }
}

std::int64_t ExperimentConfig::get_int(const std::string& key, std::int64_t fallback) const {
  return has(key) ? get_int(key) : fallback;
}

double ExperimentConfig::get_double(const std::string& key) const {
  const std::string v = get_string(key);
  try {
    std::size_t used = 0;
    const double r = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument("");
    return r;
  } catch (...) {
    throw ConfigError(key, "expected number, got '" + v + "'");
  }
}

double ExperimentConfig::get_double(const std::string& key, double fallback) const {
  return has(key) ? get_double(key) : fallback;
}

std::uint64_t ExperimentConfig::get_seed(const std::string& key, std::uint64_t fallback) const {
  if (!has(key)) return fallback;
  const std::string v = get_string(key);
  try {
    std::size_t used = 0;
    const std::uint64_t r = std::stoull(v, &used);
    if (used != v.size()) throw std::invalid_argument("");
    return r;
  } catch (...) {
    throw ConfigError(key, "expected unsigned 64-bit seed, got '" + v + "'");
  }
}

std::vector<std::int64_t> ExperimentConfig::get_int_list(const std::string& key) const {
  const std::string v = get_string(key);
  std::vector<std::int64_t> out;
  std::istringstream in(v);
  std::string item;
  while (std::getline(in, item, ',')) {
    const std::string t = trim(item);
    if (t.empty()) continue;
    try {
      out.push_back(std::stoll(t));
    } catch (...) {
      throw ConfigError(key, "expected comma-separated integers, got '" + v + "'");
    }
  }
  if (out.empty()) throw ConfigError(key, "expected a nonempty integer list");
  return out;
}

std::string ExperimentConfig::canonical_text() const {
  std::ostringstream out;
  for (const auto& [k, v] : fields_) out << k << " = " << v << "\n";
  return out.str();
}

// ---------------------------------------------------------------------------
// SHA-1 (for the git-style config blob hash)

namespace {

struct Sha1 {
  std::uint32_t h[5] = {0x67452301u, 0xEFCDAB89u, 0x98BADCFEu, 0x10325476u, 0xC3D2E1F0u};

  static std::uint32_t rol(std::uint32_t x, int s) { return (x << s) | (x >> (32 - s)); }

  void block(const unsigned char* p) {
    std::uint32_t w[80];
    for (int i = 0; i < 16; ++i)
      w[i] = (std::uint32_t(p[4 * i]) << 24) | (std::uint32_t(p[4 * i + 1]) << 16) |
             (std::uint32_t(p[4 * i + 2]) << 8) | std::uint32_t(p[4 * i + 3]);
    for (int i = 16; i < 80; ++i) w[i] = rol(w[i - 3] ^ w[i - 8] ^ w[i - 14] ^ w[i - 16], 1);
    std::uint32_t a = h[0], b = h[1], c = h[2], d = h[3], e = h[4];
    for (int i = 0; i < 80; ++i) {
      std::uint32_t f, k;
      if (i < 20) {
        f = (b & c) | (~b & d);
        k = 0x5A827999u;
      } else if (i < 40) {
        f = b ^ c ^ d;
        k = 0x6ED9EBA1u;
      } else if (i < 60) {
        f = (b & c) | (b & d) | (c & d);
        k = 0x8F1BBCDCu;
      } else {
        f = b ^ c ^ d;
        k = 0xCA62C1D6u;
      }
      const std::uint32_t t = rol(a, 5) + f + e + k + w[i];
      e = d;
      d = c;
      c = rol(b, 30);
      b = a;
      a = t;
    }
    h[0] += a;
    h[1] += b;
    h[2] += c;
    h[3] += d;
    h[4] += e;
  }

  std::string digest(std::string_view data) {
    std::string msg(data);
    const std::uint64_t bits = std::uint64_t(msg.size()) * 8;
    msg.push_back(static_cast<char>(0x80));
    while (msg.size() % 64 != 56) msg.push_back('\0');
    for (int i = 7; i >= 0; --i) msg.push_back(static_cast<char>((bits >> (8 * i)) & 0xFF));
    for (std::size_t off = 0; off < msg.size(); off += 64)
      block(reinterpret_cast<const unsigned char*>(msg.data()) + off);
    std::ostringstream out;
    out << std::hex << std::setfill('0');
    for (std::uint32_t x : h) out << std::setw(8) << x;
    return out.str();
  }
};

}  // namespace

std::string git_blob_hash(std::string_view content) {
  std::string blob = "blob " + std::to_string(content.size());
  blob.push_back('\0');
  blob.append(content);
  return Sha1{}.digest(blob);
}

// ---------------------------------------------------------------------------
// Parallel trials

int thread_count() {
  if (const char* env = std::getenv("RMT_THREADS")) {
    const int v = std::atoi(env);
    if (v >= 1) return v;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

void parallel_trials(long trials, const std::function<void(long)>& body) {
  if (trials <= 0) return;
  const long workers = std::min<long>(thread_count(), trials);

  std::atomic<long> next{0};
  std::mutex error_mutex;
  std::exception_ptr error;
  long error_trial = -1;

  auto run = [&] {
    for (;;) {
      const long i = next.fetch_add(1);
      if (i >= trials) return;
      try {
        body(i);
      } catch (...) {
        std::scoped_lock lock(error_mutex);
        if (!error || i < error_trial) {
          error = std::current_exception();
          error_trial = i;
        }
        next.store(trials);
        return;
      }
    }
  };

  if (workers <= 1) {
    run();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (long w = 0; w < workers; ++w) pool.emplace_back(run);
    for (auto& t : pool) t.join();
  }

  if (error) {
    try {
      std::rethrow_exception(error);
    } catch (const std::exception& e) {
      throw std::runtime_error("trial " + std::to_string(error_trial) + ": " + e.what());
    }
  }
}

Eigen::MatrixXd sample_scaled_eigenvalues(const std::string& atom_name, int p, int n,
                                          const std::vector<int>& indices_one_based, long trials,
                                          std::uint64_t master_seed, std::uint64_t ensemble_tag) {
  const atoms::AtomDistribution dist = atoms::from_name(atom_name);
  for (int idx : indices_one_based)
    if (idx < 1 || idx > p)
      throw std::invalid_argument("sample_scaled_eigenvalues: index out of range");

  Eigen::MatrixXd out(trials, static_cast<long>(indices_one_based.size()));
  const std::uint64_t stream = derive_seed(master_seed, ensemble_tag);
  parallel_trials(trials, [&](long t) {
    const auto m = spectral::generate_matrix(p, n, dist, derive_seed(stream, t));
    const Eigen::VectorXd lam = spectral::covariance_eigenvalues(m);
    for (std::size_t j = 0; j < indices_one_based.size(); ++j)
      out(t, static_cast<long>(j)) = n * lam[indices_one_based[j] - 1];
  });
  return out;
}

// ---------------------------------------------------------------------------
// Experiment envelope

RunReport run_experiment(const ExperimentConfig& config) {
  const std::string name = config.get_string("experiment");
  const auto t0 = std::chrono::steady_clock::now();

  bool pass = false;
  nlohmann::ordered_json aggregates = run_named_experiment(name, config, &pass);

  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  RunReport rep;
  rep.pass = pass;
  rep.json["schema"] = std::string(kReportSchema);
  rep.json["config_schema"] = std::string(kConfigSchema);
  rep.json["experiment"] = name;
  rep.json["config"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : config.fields()) rep.json["config"][k] = v;
  rep.json["config_hash"] = git_blob_hash(config.canonical_text());
  rep.json["library_version"] = std::string(kLibraryVersion);
  rep.json["aggregates"] = std::move(aggregates);
  rep.json["pass"] = pass;
  rep.json["wall_time_s"] = wall;
  return rep;
}

void write_report(const RunReport& report, const std::string& path) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p);
  if (!out) throw std::runtime_error("cannot write report to '" + path + "'");
  out << report.json.dump(2) << "\n";
}

}  // namespace rmtlab::harness
