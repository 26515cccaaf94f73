// Command-line front end: classify, verify, cg-table, sweep.
// Exit codes: 0 all checks pass, 1 verification failure, 2 usage or config error.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "qhahn/algebra.hpp"
#include "qhahn/report.hpp"

namespace {

using qhahn::report::ConfigError;
using qhahn::report::json;

constexpr int kPass = 0;
constexpr int kFail = 1;
constexpr int kUsage = 2;

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open configuration file '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("configuration file '" + path + "' is not valid JSON: " + e.what());
  }
}

void write_output(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  out << text;
}

// Flags shared by verify and cg-table; set ones override the config file.
struct RunFlags {
  std::string config_path;
  std::optional<double> q, a2, a1, mu_a, b2, b1, mu_b;
  std::optional<int> dim, qhahn_max;
  std::vector<int> sectors;
  std::optional<double> tol_relation, tol_crossmethod, tol_spectrum;
  std::optional<std::string> format, output, mode;

  void attach(CLI::App* app) {
    app->add_option("--config", config_path, "JSON run configuration")->check(CLI::ExistingFile);
    app->add_option("--q", q, "deformation parameter");
    app->add_option("--a2", a2, "a2 of the first factor");
    app->add_option("--a1", a1, "a1 of the first factor");
    app->add_option("--mu-a", mu_a, "weight offset of the first factor");
    app->add_option("--b2", b2, "b2 of the second factor");
    app->add_option("--b1", b1, "b1 of the second factor");
    app->add_option("--mu-b", mu_b, "weight offset of the second factor");
    app->add_option("--dim", dim, "states kept per factor");
    app->add_option("--sectors", sectors, "sectors to check (default: all)")->delimiter(',');
    app->add_option("--qhahn-max", qhahn_max, "largest sector audited against the 3phi2 form");
    app->add_option("--tol-relation", tol_relation);
    app->add_option("--tol-crossmethod", tol_crossmethod);
    app->add_option("--tol-spectrum", tol_spectrum);
    app->add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    app->add_option("-o,--output", output, "output path (default: standard output)");
    app->add_option("--mode", mode, "ladder mode")->check(CLI::IsMember({"auto", "unitary", "raw"}));
  }

  qhahn::report::RunConfig resolve() const {
    qhahn::report::RunConfig c;
    if (!config_path.empty()) c = qhahn::report::parse_config(read_json_file(config_path), c);
    if (q) c.q = *q;
    if (a2) c.A.a2 = *a2;
    if (a1) c.A.a1 = *a1;
    if (mu_a) c.A.mu = *mu_a;
    if (b2) c.B.a2 = *b2;
    if (b1) c.B.a1 = *b1;
    if (mu_b) c.B.mu = *mu_b;
    if (dim) c.dim = *dim;
    if (!sectors.empty()) c.sectors = sectors;
    if (qhahn_max) c.qhahn_max = *qhahn_max;
    if (tol_relation) c.tolerances.relation = *tol_relation;
    if (tol_crossmethod) c.tolerances.crossmethod = *tol_crossmethod;
    if (tol_spectrum) c.tolerances.spectrum = *tol_spectrum;
    if (format) c.outputs.format = *format;
    if (output) c.outputs.path = *output;
    if (mode) c.mode = qhahn::report::parse_mode(*mode);
    qhahn::report::validate(c);
    return c;
  }
};

int cmd_classify(double a2, double a1, double q) {
  const qhahn::AlgebraSpec<double> spec{a2, a1, qhahn::QBase<double>(q)};
  const auto t = qhahn::classify(spec);
  std::cout << qhahn::type_name(t) << '\n' << qhahn::type_condition(t) << '\n';
  return kPass;
}

int cmd_verify(const RunFlags& flags) {
  const auto config = flags.resolve();
  const auto result = qhahn::report::run_verify(config);
  write_output(config.outputs.path, result.report.dump(2) + "\n");
  std::cerr << "verify: " << (result.pass ? "PASS" : "FAIL") << " ("
            << result.report.value("failures", json::array()).size() << " failing checks)\n";
  return result.pass ? kPass : kFail;
}

int cmd_cg_table(const RunFlags& flags, int N) {
  auto config = flags.resolve();
  if (!flags.format) config.outputs.format = "csv";
  qhahn::report::CGTableResult table;
  try {
    table = qhahn::report::run_cg_table(config, N);
  } catch (const qhahn::RequiresUnitary& e) {
    std::cerr << "cg-table: " << e.what() << '\n';
    return kFail;
  }
  write_output(config.outputs.path, config.outputs.format == "csv" ? table.csv() : table.to_json().dump(2) + "\n");
  if (!table.pass)
    std::cerr << "cg-table: diagonalization and recurrence differ by "
              << table.metadata.at("max_abs_diag_recur").get<double>() << '\n';
  return table.pass ? kPass : kFail;
}

int cmd_sweep(const std::string& config_path, const std::string& output) {
  qhahn::report::SweepGrid grid;
  if (!config_path.empty()) grid = qhahn::report::parse_grid(read_json_file(config_path));
  const auto result = qhahn::report::run_sweep(grid, qhahn::report::worker_count());
  write_output(output, result.report.dump(1) + "\n");
  const auto& summary = result.report.at("summary");
  std::cerr << "sweep: " << summary.at("passed").get<std::size_t>() << "/" << summary.at("cells").get<std::size_t>()
            << " cells pass\n";
  return result.pass ? kPass : kFail;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Representations, AW(3) relations and Clebsch-Gordan tables of (a2, a1) algebras"};
  app.require_subcommand(1);

  double c_a2 = 0, c_a1 = 0, c_q = 0;
  auto* classify = app.add_subcommand("classify", "print the algebra type of (a2, a1) at base q");
  classify->add_option("--a2", c_a2)->required();
  classify->add_option("--a1", c_a1)->required();
  classify->add_option("--q", c_q)->required();

  RunFlags verify_flags;
  auto* verify = app.add_subcommand("verify", "run the verification suite on one composition");
  verify_flags.attach(verify);

  RunFlags table_flags;
  int table_N = 0;
  auto* table = app.add_subcommand("cg-table", "Clebsch-Gordan table on one sector by all three methods");
  table_flags.attach(table);
  table->add_option("-N,--N", table_N, "sector")->required();

  std::string sweep_config, sweep_output;
  auto* sweep = app.add_subcommand("sweep", "verification over a grid of compositions");
  sweep->add_option("--config", sweep_config, "JSON grid description")->check(CLI::ExistingFile);
  sweep->add_option("-o,--output", sweep_output, "output path (default: standard output)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*classify) return cmd_classify(c_a2, c_a1, c_q);
    if (*verify) return cmd_verify(verify_flags);
    if (*table) return cmd_cg_table(table_flags, table_N);
    if (*sweep) return cmd_sweep(sweep_config, sweep_output);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const qhahn::InvalidBase& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const qhahn::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFail;
  }
  return kUsage;
}
