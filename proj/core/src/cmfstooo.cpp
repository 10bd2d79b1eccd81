#include "certmf/cmfstooo.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace certmf {

double gamma_weight(int depth, std::uint64_t, double gamma, std::uint64_t arity) {
  if (!(gamma > 0.0 && gamma < 1.0)) throw std::invalid_argument("gamma must lie in (0,1)");
  const double h = depth;
  return gamma / ((h + 1.0) * (h + 2.0) * std::pow(static_cast<double>(arity), h));
}

std::uint64_t batch_size(double alpha, double variance, double gamma_node) {
  if (!(alpha > 0.0)) throw std::invalid_argument("batch_size: alpha must be > 0");
  const double m = std::ceil(2.0 * variance / (alpha * alpha) * std::log(2.0 / gamma_node));
  return m < 1.0 ? 1 : static_cast<std::uint64_t>(m);
}

std::uint64_t c_gamma(double alpha, const BatchCostParams& p) {
  const double LR = p.L * p.radius;
  if (!(alpha > 0.0)) throw std::invalid_argument("c_gamma: alpha must be > 0");
  if (alpha > LR * (1.0 + 1e-12)) throw std::invalid_argument("c_gamma: alpha exceeds LR");
  double h = std::max(0.0, std::log(LR / alpha) / std::log(1.0 / p.delta));
  // Snap round-off so alpha = LR delta^h gives the integer depth exactly.
  if (std::abs(h - std::round(h)) < 1e-9) h = std::round(h);
  // ln(2(h+1)(h+2)K^h / gamma) expanded to keep K^h from overflowing.
  const double log_term = std::log(2.0 * (h + 1.0) * (h + 2.0) / p.gamma) +
                          h * std::log(static_cast<double>(p.arity));
  const double m = std::ceil(2.0 * p.variance / (alpha * alpha) * log_term);
  return m < 1.0 ? 1 : static_cast<std::uint64_t>(m);
}

CostFunction c_gamma_cost(const BatchCostParams& p) {
  std::ostringstream os;
  os << "c_gamma(v=" << p.variance << ",gamma=" << p.gamma << ")";
  return CostFunction::custom(os.str(), [p](double alpha) {
    return static_cast<double>(c_gamma(alpha, p));
  });
}

std::uint64_t BatchOracle::node_stream(NodeId node) {
  return counter_hash(0x5eed, static_cast<std::uint64_t>(node.depth), node.index);
}

double BatchOracle::price(NodeId node, double alpha) {
  const double w = gamma_weight(node.depth, node.index, gamma_, arity_);
  return static_cast<double>(batch_size(alpha, env_.variance(), w));
}

QueryOracle::Observation BatchOracle::observe(std::size_t, NodeId node, std::span<const double> x,
                                              double alpha) {
  const double w = gamma_weight(node.depth, node.index, gamma_, arity_);
  const std::uint64_t m = batch_size(alpha, env_.variance(), w);
  const auto batch = env_.sample_batch(node_stream(node), x, m);
  return {batch.mean, m};
}

RunResult run_stochastic(const HierarchicalPartition& partition, const ObjectiveSpec& objective,
                         const StoRunConfig& config) {
  if (!(config.gamma > 0.0 && config.gamma < 1.0)) {
    throw std::invalid_argument("run_stochastic: gamma must lie in (0,1)");
  }
  if (!(config.eps > 0.0)) throw std::invalid_argument("run_stochastic: eps must be > 0");
  const StochasticEnvironment env(objective, config.variance, config.noise, config.seed);
  BatchOracle oracle(env, config.gamma, partition.arity());
  CmfDoo engine(partition, oracle, config.L);
  const StopRule rule{config.eps, config.budget, config.max_depth};
  engine.init(rule);
  while (engine.expand_step(rule) == StopReason::running) {
  }
  return {engine.outcome(), engine.trace()};
}

}  // namespace certmf
