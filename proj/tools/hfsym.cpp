// hfsym: run scenarios from a JSON config.
//
//   hfsym <solve|charges|defect|compose|check> <config.json> [--out PATH] [--seed N] [--tol X]
//                                                            [--csv PATH] [--expr WORD]
//
// Exit status: 0 success, 1 failed check / rejected defect / DSL diagnostic,
// 2 configuration or I/O error (message on stderr, no report written).

#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"

#include "hfsym/scenario.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Graded higher-form symmetry scenarios on cubical tori"};
  app.set_version_flag("--version", hfsym::cli::kVersion);

  std::string command, config, out_path, csv_path, expr;
  std::uint64_t seed = 0;
  double tol = 0.0;
  app.add_option("command", command, "solve | charges | defect | compose | check")
      ->required()
      ->check(CLI::IsMember({"solve", "charges", "defect", "compose", "check"}));
  app.add_option("config", config, "scenario config (JSON)")->required();
  app.add_option("--out", out_path, "write the report here instead of stdout");
  auto* seed_opt = app.add_option("--seed", seed, "override the config seed");
  auto* tol_opt = app.add_option("--tol", tol, "override the solver tolerance")->check(CLI::PositiveNumber);
  app.add_option("--csv", csv_path, "dump the field as CSV");
  auto* expr_opt = app.add_option("--expr", expr, "composition word for the compose command");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  hfsym::cli::RunRequest req;
  req.command = command;
  {
    std::ifstream in(config, std::ios::binary);
    if (!in) {
      std::cerr << "hfsym: cannot read config '" << config << "'\n";
      return 2;
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    req.config_text = ss.str();
  }
  req.config_dir = std::filesystem::path(config).parent_path();
  if (*seed_opt) req.overrides.seed = seed;
  if (*tol_opt) req.overrides.tolerance = tol;
  if (*expr_opt) req.overrides.expr = expr;
  if (!csv_path.empty()) req.csv = csv_path;

  const auto outcome = hfsym::cli::execute(req);
  if (outcome.exit_code == 2) {
    std::cerr << "hfsym: " << outcome.error << "\n";
    return 2;
  }
  if (out_path.empty()) {
    std::cout << outcome.report;
  } else {
    std::ofstream out(out_path, std::ios::binary);
    if (!out || !(out << outcome.report) || !out.flush()) {
      std::cerr << "hfsym: cannot write report to '" << out_path << "'\n";
      return 2;
    }
  }
  return outcome.exit_code;
}
