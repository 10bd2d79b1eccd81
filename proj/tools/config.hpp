#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "certmf/cmfstooo.hpp"
#include "certmf/cost.hpp"
#include "certmf/environments.hpp"
#include "certmf/geometry.hpp"
#include "certmf/objectives.hpp"

namespace certmf::cli {

/// A problem with the experiment config; `field` is the dotted path of the
/// offending entry (e.g. "partition.delta").
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& message)
      : std::runtime_error(field + ": " + message), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

struct PartitionConfig {
  std::string preset;  // "dyadic-sup" or empty
  Box box;
  Norm norm = Norm::sup;
  std::uint64_t K = 2;
  double delta = 0.5;
  double R = 1.0;
  double nu = 0.5;
  int scan_per_axis = 3;
};

struct ObjectiveConfig {
  std::string name;
  BuiltinParams params;
  std::filesystem::path file;  // tabulated objectives
};

struct BumpConfig {
  std::optional<Point> center;  // defaults to the maximizer of f
  double scale = 0.0;
  int sign = 1;
};

struct EnvironmentConfig {
  std::string kind = "noiseless";
  std::optional<BumpConfig> bump;
  double variance = 0.01;
  NoiseKind noise = NoiseKind::gaussian;
};

struct CostConfig {
  std::string kind = "constant";  // constant | power-law | tabulated
  double c0 = 1.0;
  double p = 2.0;
  std::vector<double> alphas;
  std::vector<double> costs;
};

struct ValidateConfig {
  int assumption_depth = 4;
  int samples_per_cell = 4;
  std::size_t lipschitz_pairs = 2000;
};

struct ExperimentConfig {
  PartitionConfig partition;
  ObjectiveConfig objective;
  EnvironmentConfig environment;
  std::string algorithm = "cmfdoo";  // cmfdoo | cmfstooo
  double gamma = 0.1;
  CostConfig cost;
  std::vector<double> eps;
  double budget = std::numeric_limits<double>::infinity();
  int max_depth = 40;
  std::vector<std::uint64_t> seeds{0};
  std::string output = "out";
  std::optional<double> grid_resolution;
  std::optional<double> beta;
  ValidateConfig validate;
};

ExperimentConfig parse_config(const std::string& yaml_text,
                              const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);

/// "a..b" (inclusive) or a single integer.
std::vector<std::uint64_t> parse_seed_range(const std::string& text);

/// Canonical form of everything that affects results (output location excluded).
nlohmann::json to_json(const ExperimentConfig& config);
/// 64-bit FNV-1a of the canonical JSON, as 16 hex digits.
std::string config_hash(const ExperimentConfig& config);

/// Everything a run needs, built and cross-checked from a config.
struct Experiment {
  ExperimentConfig config;
  std::string hash;
  HierarchicalPartition partition;
  ObjectiveSpec objective;
  CostFunction cost;  // c_gamma for cmfstooo
  double L = 1.0;
  bool stochastic = false;
  EnvironmentKind env_kind = EnvironmentKind::noiseless;
  std::optional<BumpParams> bump;

  double eps0() const { return L * partition.domain().diameter(); }
  /// Explicit --grid-resolution / config value, else eps / (10 L).
  double grid_for(double eps) const;
};

Experiment build_experiment(const ExperimentConfig& config);

}  // namespace certmf::cli
