#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "certmf/geometry.hpp"
#include "certmf/objectives.hpp"

namespace certmf {

enum class EnvironmentKind { noiseless, pessimistic, optimistic, collaborative, bump };

EnvironmentKind parse_environment_kind(std::string_view name);
std::string_view to_string(EnvironmentKind kind);

/// Spike h(x) = max(8*scale - 16*(L/K)*||x - center||, 0) with
/// K = 16L / (L - Lip(f)); h is (L - Lip(f))-Lipschitz and vanishes outside
/// the ball of radius K*scale/(2L).
struct BumpParams {
  Point center;
  double scale = 0.0;
  double K_lb = 0.0;
  int sign = 1;

  double support_radius(double L) const { return K_lb * scale / (2.0 * L); }
};

/// Validates L > Lip(f) and that the support radius fits in diam(X).
BumpParams make_bump_params(const ObjectiveSpec& f, Point center, double scale, int sign);

double bump_value(const BumpParams& params, std::span<const double> x, double L, Norm norm);

/// The perturbed objective g = f + sign * h. Its maximum is taken over a fine
/// grid plus the bump center and the maximizer of f, and flagged approximate.
ObjectiveSpec bumped_objective(const ObjectiveSpec& f, const BumpParams& params);

struct QueryRecord {
  std::size_t t = 0;
  Point x;
  double alpha = 0.0;
  double y = 0.0;
  double f_x = 0.0;
  bool violation = false;  // |y - f(x)| > alpha
};

/// Deterministic responder E_t(x, alpha). Every kind but `bump` satisfies
/// |y - f(x)| <= alpha. A bump environment answers f(x) + sign*h(x) exactly,
/// i.e. it is honest for the hidden function g, and flags responses that
/// break the contract with respect to f.
class DeterministicEnvironment {
 public:
  DeterministicEnvironment(EnvironmentKind kind, ObjectiveSpec objective,
                           std::optional<BumpParams> bump = std::nullopt);

  double respond(std::size_t t, std::span<const double> x, double alpha);

  EnvironmentKind kind() const { return kind_; }
  const ObjectiveSpec& objective() const { return objective_; }
  /// Function the responses are honest for: g for bump environments, f otherwise.
  const ObjectiveSpec& hidden_objective() const { return hidden_ ? *hidden_ : objective_; }
  const std::optional<BumpParams>& bump() const { return bump_; }

  const std::vector<QueryRecord>& log() const { return log_; }
  std::size_t violations() const { return violations_; }
  bool last_violation() const { return !log_.empty() && log_.back().violation; }

 private:
  EnvironmentKind kind_;
  ObjectiveSpec objective_;
  std::optional<BumpParams> bump_;
  std::optional<ObjectiveSpec> hidden_;
  std::map<std::vector<std::uint64_t>, std::uint64_t> visits_;  // bitwise point -> count
  std::vector<QueryRecord> log_;
  std::size_t violations_ = 0;
};

enum class NoiseKind { gaussian, uniform };

NoiseKind parse_noise_kind(std::string_view name);
std::string_view to_string(NoiseKind kind);

/// Counter-based 64-bit hash of (seed, stream, counter); the basis of all
/// reproducible noise.
std::uint64_t counter_hash(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter);

/// Mini-batch sampler y_u = f(x) + zeta_u with zeta_u v-sub-Gaussian: either
/// N(0, v) or Unif[-sqrt(v), sqrt(v)] (variance v/3). Draw u of stream s is a
/// pure function of (seed, s, u).
class StochasticEnvironment {
 public:
  StochasticEnvironment(ObjectiveSpec objective, double variance, NoiseKind noise,
                        std::uint64_t seed);

  struct Batch {
    std::vector<double> samples;
    double mean = 0.0;
  };

  Batch sample_batch(std::uint64_t stream, std::span<const double> x, std::size_t m) const;
  double noise(std::uint64_t stream, std::uint64_t u) const;

  const ObjectiveSpec& objective() const { return objective_; }
  double variance() const { return variance_; }
  NoiseKind noise_kind() const { return noise_; }
  std::uint64_t seed() const { return seed_; }

 private:
  ObjectiveSpec objective_;
  double variance_;
  NoiseKind noise_;
  std::uint64_t seed_;
};

}  // namespace certmf
