#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <vector>

#include "certmf/cmfdoo.hpp"
#include "config.hpp"

namespace certmf::cli {

enum ExitCode : int { kOk = 0, kValidationFailed = 1, kConfigError = 2, kBudgetExhausted = 3 };

struct CommandOptions {
  std::filesystem::path out;  // empty: the config's output entry
  unsigned parallel = 1;
  std::optional<std::vector<std::uint64_t>> seeds;
  std::optional<double> grid_resolution;
};

/// Applies command-line overrides (seeds, grid resolution) to a parsed config.
ExperimentConfig apply_overrides(ExperimentConfig config, const CommandOptions& opts);

struct RunJob {
  std::size_t eps_index = 0;
  double eps = 0.0;
  std::uint64_t seed = 0;
};

struct RunRecord {
  RunJob job;
  RunResult result;
  std::optional<ObjectiveSpec> hidden;  // function the responses were honest for
  std::size_t contract_violations = 0;  // responses with |y - f(x)| > alpha
};

/// One run of the configured algorithm. Deterministic given (config, job).
RunRecord execute(const Experiment& exp, const RunJob& job);

/// Runs fn(i) for i in [0, n) on up to `threads` worker threads.
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn);

/// Each command writes its files under the output directory and returns an ExitCode.
int cmd_run(const Experiment& exp, const CommandOptions& opts, std::ostream& log);
int cmd_complexity(const Experiment& exp, const CommandOptions& opts, std::ostream& log);
int cmd_validate(const Experiment& exp, const CommandOptions& opts, std::ostream& log);
int cmd_sweep(const Experiment& exp, const CommandOptions& opts, std::ostream& log);

/// Base name of the files of one run, e.g. "run_e00_s0".
std::string run_stem(const RunJob& job);

}  // namespace certmf::cli
