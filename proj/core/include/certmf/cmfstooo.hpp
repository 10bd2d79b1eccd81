#pragma once

#include <cstdint>
#include <limits>

#include "certmf/cmfdoo.hpp"
#include "certmf/cost.hpp"
#include "certmf/environments.hpp"

namespace certmf {

/// Union-bound weight gamma / ((h+1)(h+2)K^h) of node (h, i). Independent of
/// i; the weights over the whole tree sum to gamma.
double gamma_weight(int depth, std::uint64_t index, double gamma, std::uint64_t arity);

/// ceil(2v/alpha^2 * ln(2/gamma_node)), at least 1.
std::uint64_t batch_size(double alpha, double variance, double gamma_node);

struct BatchCostParams {
  double variance = 1.0;
  double gamma = 0.1;
  std::uint64_t arity = 2;
  double L = 1.0;
  double radius = 1.0;  // R
  double delta = 0.5;
};

/// Batch size as a function of accuracy alone, with the depth replaced by the
/// real-valued h(alpha) = ln(LR/alpha)/ln(1/delta). Requires 0 < alpha <= LR.
std::uint64_t c_gamma(double alpha, const BatchCostParams& p);

/// c_gamma wrapped as a cost function.
CostFunction c_gamma_cost(const BatchCostParams& p);

struct StoRunConfig {
  double gamma = 0.1;
  double variance = 0.01;
  NoiseKind noise = NoiseKind::gaussian;
  std::uint64_t seed = 0;
  double L = 1.0;
  double eps = 0.1;
  double budget = std::numeric_limits<double>::infinity();  // in samples
  int max_depth = 40;
};

/// Mini-batch oracle: a query at node (h, i) draws batch_size(alpha, v,
/// gamma_{h,i}) samples and reports their mean. Noise for draw u at a node
/// comes from stream node_stream(node), so replays are exact.
class BatchOracle final : public QueryOracle {
 public:
  BatchOracle(const StochasticEnvironment& env, double gamma, std::uint64_t arity)
      : env_(env), gamma_(gamma), arity_(arity) {}

  double price(NodeId node, double alpha) override;
  Observation observe(std::size_t t, NodeId node, std::span<const double> x,
                      double alpha) override;

  static std::uint64_t node_stream(NodeId node);

 private:
  const StochasticEnvironment& env_;
  double gamma_;
  std::uint64_t arity_;
};

/// Optimistic search with mini-batch sampling; the cost of a round is its
/// batch size, and the outcome's sigma is the total sample count at the
/// first round with xi_t <= eps.
RunResult run_stochastic(const HierarchicalPartition& partition, const ObjectiveSpec& objective,
                         const StoRunConfig& config);

}  // namespace certmf
