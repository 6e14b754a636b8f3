// cutofflab command-line front end.
//
//   cutofflab run --config <path> [--out <dir>] [--workers <n>]
//   cutofflab list-experiments
//   cutofflab validate --config <path>
//
// Exit status: 0 when every declared criterion passes (or the config is
// valid), 1 when a criterion fails or the config has violations, 2 on errors.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "cutofflab/experiments.hpp"

namespace ex = cutofflab::experiments;

namespace {

int run(const std::string& config_path, const std::string& out, unsigned workers) {
  const auto config = ex::load_config(config_path);
  ex::RunOptions options;
  if (!out.empty()) options.out = out;
  if (workers > 0) options.workers = workers;
  const ex::Report report = ex::run_experiment(config, options);
  for (const auto& [name, entry] : report.summary["criteria"].items())
    std::cout << (entry["pass"].get<bool>() ? "PASS " : "FAIL ") << name << "\n";
  std::cout << report.experiment << ": " << (report.pass ? "pass" : "fail") << " (" << report.rows.size()
            << " rows, " << report.out_dir.string() << ")\n";
  return report.pass ? 0 : 1;
}

int list() {
  for (const auto& e : ex::list_experiments()) {
    std::cout << e.name << "\n  " << e.description << "\n  result: " << e.anchor << "\n  params:";
    for (const auto& k : e.required) std::cout << " " << k;
    if (!e.optional.empty()) {
      std::cout << " [";
      for (std::size_t i = 0; i < e.optional.size(); ++i) std::cout << (i ? " " : "") << e.optional[i];
      std::cout << "]";
    }
    std::cout << (e.needs_state ? "\n  state: required" : "") << "\n  criteria:";
    for (const auto& k : e.criteria) std::cout << " " << k;
    std::cout << "\n";
  }
  return 0;
}

int validate(const std::string& config_path) {
  const auto violations = ex::validate_config(std::filesystem::path(config_path));
  for (const auto& v : violations) std::cout << v << "\n";
  if (violations.empty()) std::cout << "valid\n";
  return violations.empty() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spectral cut-off dynamics experiments"};
  app.require_subcommand(1);

  std::string config, out;
  unsigned workers = 0;
  auto* run_cmd = app.add_subcommand("run", "run an experiment config");
  run_cmd->add_option("--config", config, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
  run_cmd->add_option("--out", out, "output directory (overrides output_dir)");
  run_cmd->add_option("--workers", workers, "worker threads (default: CUTOFFLAB_WORKERS or 1)")
      ->check(CLI::PositiveNumber);

  auto* list_cmd = app.add_subcommand("list-experiments", "list the experiment registry");

  std::string validate_path;
  auto* validate_cmd = app.add_subcommand("validate", "validate a config without running it");
  validate_cmd->add_option("--config", validate_path, "experiment config (JSON)")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run_cmd) return run(config, out, workers);
    if (*list_cmd) return list();
    if (*validate_cmd) return validate(validate_path);
  } catch (const cutofflab::error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
