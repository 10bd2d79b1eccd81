#include <iostream>

#include <CLI11.hpp>

#include "commands.hpp"

using namespace certmf::cli;

int main(int argc, char** argv) {
  CLI::App app{"certmf: certified multi-fidelity Lipschitz optimization experiments"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out;
  std::string seeds;
  unsigned parallel = 1;
  double grid = 0.0;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "Experiment config (YAML)")->required();
    sub->add_option("--out", out, "Output directory (overrides the config's output)");
    sub->add_option("--seeds", seeds, "Seed range a..b (overrides the config's seeds)");
    sub->add_option("--parallel", parallel, "Worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--grid-resolution", grid, "Grid step for packings and envelopes")
        ->check(CLI::PositiveNumber);
  };
  auto* run = app.add_subcommand("run", "Run the configured algorithm; write traces and outcomes");
  auto* complexity = app.add_subcommand("complexity", "Write complexity reports (S, bound predictions)");
  auto* validate = app.add_subcommand("validate", "Run end-to-end validity checks");
  auto* sweep = app.add_subcommand("sweep", "Run eps x seed grids; write plot CSV and Monte-Carlo summaries");
  for (auto* s : {run, complexity, validate, sweep}) add_common(s);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    CommandOptions opts;
    opts.out = out;
    opts.parallel = parallel;
    if (!seeds.empty()) {
      try {
        opts.seeds = parse_seed_range(seeds);
      } catch (const std::invalid_argument& e) {
        throw ConfigError("--seeds", e.what());
      }
    }
    if (grid > 0.0) opts.grid_resolution = grid;
    const auto config = apply_overrides(load_config(config_path), opts);
    const auto exp = build_experiment(config);
    if (run->parsed()) return cmd_run(exp, opts, std::cout);
    if (complexity->parsed()) return cmd_complexity(exp, opts, std::cout);
    if (validate->parsed()) return cmd_validate(exp, opts, std::cout);
    return cmd_sweep(exp, opts, std::cout);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kValidationFailed;
  }
}
