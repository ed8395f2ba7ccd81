#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "rmtlab/atoms.hpp"
#include "rmtlab/harness.hpp"
#include "rmtlab/serialize.hpp"
#include "rmtlab/spectral.hpp"

namespace rmtlab::harness {

namespace {

int do_run(const std::string& config_path, const std::string& out_override) {
  ExperimentConfig cfg;
  try {
    cfg = ExperimentConfig::parse_file(config_path);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  try {
    const RunReport rep = run_experiment(cfg);
    const std::string out =
        !out_override.empty() ? out_override : cfg.get_string("out", "report.json");
    write_report(rep, out);
    std::cout << (rep.pass ? "PASS" : "FAIL") << " " << cfg.get_string("experiment") << "  ("
              << out << ")\n";
    return rep.pass ? 0 : 1;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

int do_catalog() {
  for (const std::string& name : atoms::catalog_names()) std::cout << name << "\n";
  return 0;
}

int do_mp_table(double y, const std::string& out, int points) {
  try {
    const auto [a, b] = mp::mp_edges(y);
    const double pad = 0.05 * (b - a);
    serialize::write_mp_table_csv(out, y, points, std::max(0.0, a - pad), b + pad);
    std::cout << "wrote " << out << "\n";
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}

int do_identities(const std::string& dims, long seeds, double tol) {
  std::ostringstream text;
  text << "experiment = identities\nseeds = " << seeds << "\ntol = " << tol << "\n";
  if (!dims.empty()) text << "dims = " << dims << "\n";
  try {
    const RunReport rep = run_experiment(ExperimentConfig::parse_text(text.str()));
    std::cout << (rep.pass ? "PASS" : "FAIL")
              << " identities, max residual = " << rep.json["aggregates"]["max_residual"]
              << "\n";
    return rep.pass ? 0 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}

int do_report_show(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    std::cerr << "error: cannot open '" << path << "'\n";
    return 2;
  }
  nlohmann::ordered_json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    std::cerr << "error: bad report JSON: " << e.what() << "\n";
    return 2;
  }
  std::cout << "experiment:   " << j.value("experiment", std::string("?")) << "\n"
            << "pass:         " << (j.value("pass", false) ? "yes" : "no") << "\n"
            << "config hash:  " << j.value("config_hash", std::string("?")) << "\n"
            << "wall time:    " << j.value("wall_time_s", 0.0) << " s\n"
            << "aggregates:\n"
            << j.value("aggregates", nlohmann::ordered_json::object()).dump(2) << "\n";
  return 0;
}

}  // namespace

int cli_main(const std::vector<std::string>& args) {
  CLI::App app{"random covariance matrix laboratory"};
  app.require_subcommand(1);

  std::string config_path, out_override;
  auto* run = app.add_subcommand("run", "run an experiment config");
  run->add_option("config", config_path, "config file (flat key = value)")->required();
  run->add_option("--out", out_override, "report path override");

  auto* catalog = app.add_subcommand("catalog", "list atom distributions");

  double mp_y = 1.0;
  std::string mp_out = "mp_table.csv";
  int mp_points = 501;
  auto* mpcmd = app.add_subcommand("mp", "Marchenko-Pastur utilities");
  mpcmd->require_subcommand(1);
  auto* mptable = mpcmd->add_subcommand("table", "write a density/CDF table");
  mptable->add_option("--y", mp_y, "aspect ratio in (0, 1]")->required();
  mptable->add_option("--out", mp_out, "CSV path");
  mptable->add_option("--points", mp_points, "table rows");

  std::string idims;
  long iseeds = 1000;
  double itol = 1e-8;
  auto* identities = app.add_subcommand("identities", "run the finite-n identity sweeps");
  identities->add_option("--dims", idims, "comma list of PxN shapes (e.g. 3x5,6x6)");
  identities->add_option("--seeds", iseeds, "randomized instances");
  identities->add_option("--tol", itol, "max residual");

  std::string report_path;
  auto* report = app.add_subcommand("report", "report utilities");
  report->require_subcommand(1);
  auto* show = report->add_subcommand("show", "summarize a report JSON");
  show->add_option("file", report_path, "report path")->required();

  std::vector<std::string> argv{"rmtlab"};
  argv.insert(argv.end(), args.begin(), args.end());
  std::vector<const char*> cargv;
  cargv.reserve(argv.size());
  for (const std::string& a : argv) cargv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(cargv.size()), cargv.data());
  } catch (const CLI::CallForHelp&) {
    std::cout << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  }

  if (*run) return do_run(config_path, out_override);
  if (*catalog) return do_catalog();
  if (*mptable) return do_mp_table(mp_y, mp_out, mp_points);
  if (*identities) return do_identities(idims, iseeds, itol);
  if (*show) return do_report_show(report_path);
  std::cerr << "usage error: missing subcommand\n";
  return 2;
}

}  // namespace rmtlab::harness
