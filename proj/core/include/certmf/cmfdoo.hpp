#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <queue>
#include <span>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "certmf/cost.hpp"
#include "certmf/environments.hpp"
#include "certmf/geometry.hpp"
#include "certmf/objectives.hpp"

namespace certmf {

/// One query of the protocol: where, how accurately, what came back, what it
/// cost, and the recommendation/certificate pair output after it. `xi` holds
/// the last certificate issued for round t (the post-selection update when
/// the round closed an iteration).
struct TraceRow {
  std::size_t t = 0;
  NodeId node;
  Point x;
  double alpha = 0.0;
  double y = 0.0;
  double step_cost = 0.0;
  double cum_cost = 0.0;
  std::uint64_t m = 1;  // evaluations drawn (mini-batch size)
  std::uint64_t cum_samples = 0;
  Point rec;
  double xi = 0.0;
};

using RunTrace = std::vector<TraceRow>;

enum class StopReason { running, certified, budget, depth_limit };

std::string_view to_string(StopReason reason);

struct RunOutcome {
  /// Realized cost complexity; +inf unless certified.
  double sigma = std::numeric_limits<double>::infinity();
  std::optional<std::size_t> tau;
  Point final_rec;
  double final_xi = 0.0;
  StopReason stop_reason = StopReason::running;
  std::size_t n_evals = 0;
  double total_cost = 0.0;
  std::uint64_t total_samples = 0;
};

struct LeafRecord {
  NodeId node;
  Point rep;
  double y = 0.0;
  double alpha = 0.0;
  double priority = 0.0;  // y + L R delta^h + alpha
};

/// What the search needs from the outside world: the price of a query before
/// it is issued (so budgets are never overrun) and the observation itself.
class QueryOracle {
 public:
  struct Observation {
    double y = 0.0;
    std::uint64_t m = 1;
  };

  virtual ~QueryOracle() = default;
  virtual double price(NodeId node, double alpha) = 0;
  virtual Observation observe(std::size_t t, NodeId node, std::span<const double> x,
                              double alpha) = 0;
};

/// Deterministic oracle: one environment response per query, priced c(alpha).
class EnvironmentOracle final : public QueryOracle {
 public:
  EnvironmentOracle(DeterministicEnvironment& env, CostFunction cost)
      : env_(env), cost_(std::move(cost)) {}

  double price(NodeId, double alpha) override { return cost_(alpha); }
  Observation observe(std::size_t t, NodeId, std::span<const double> x, double alpha) override {
    return {env_.respond(t, x, alpha), 1};
  }

 private:
  DeterministicEnvironment& env_;
  CostFunction cost_;
};

struct StopRule {
  std::optional<double> eps;
  double budget = std::numeric_limits<double>::infinity();
  int max_depth = 40;
};

/// Optimistic tree search with accuracy L R delta^h at depth h, expanding one
/// leaf per iteration and issuing a recommendation and error certificate
/// after every query. Leaves live in a max-heap keyed by priority with ties
/// broken toward smaller depth, then smaller index; removed leaves are
/// tombstoned and skipped lazily.
class CmfDoo {
 public:
  CmfDoo(const HierarchicalPartition& partition, QueryOracle& oracle, double L);

  /// Queries the root at accuracy L R. Throws if the root has no feasible
  /// representative.
  const TraceRow& init(const StopRule& rule = {});

  /// Queries every feasible child of the current head, then retires the head
  /// and selects the next one. Stops early (and returns the stop reason) when
  /// the rule's certificate target, budget or depth limit triggers.
  StopReason expand_step(const StopRule& rule = {});

  bool initialized() const { return !trace_.empty(); }
  StopReason stop_reason() const { return stop_; }
  const RunTrace& trace() const { return trace_; }
  RunOutcome outcome() const;

  const LeafRecord& head() const { return leaves_.at(key(head_)); }
  std::vector<NodeId> leaves() const;
  double best_lower_bound() const { return best_lower_; }
  double accuracy(int depth) const;
  double L() const { return L_; }
  const HierarchicalPartition& partition() const { return partition_; }

 private:
  struct HeapEntry {
    double priority;
    int depth;
    std::uint64_t index;
  };
  struct HeapOrder {
    bool operator()(const HeapEntry& a, const HeapEntry& b) const {
      if (a.priority != b.priority) return a.priority < b.priority;
      if (a.depth != b.depth) return a.depth > b.depth;
      return a.index > b.index;
    }
  };
  struct Key {
    int depth;
    std::uint64_t index;
    bool operator==(const Key&) const = default;
  };
  struct KeyHash {
    std::size_t operator()(const Key& k) const noexcept {
      return std::hash<std::uint64_t>{}(k.index * 0x9e3779b97f4a7c15ULL ^
                                        static_cast<std::uint64_t>(k.depth));
    }
  };
  static Key key(NodeId n) { return {n.depth, n.index}; }

  bool query(NodeId node, const Point& x, const StopRule& rule);
  double certificate() const;
  void select_head();
  void finish(StopReason reason, const StopRule& rule);

  const HierarchicalPartition& partition_;
  QueryOracle& oracle_;
  double L_;

  std::unordered_map<Key, LeafRecord, KeyHash> leaves_;
  std::priority_queue<HeapEntry, std::vector<HeapEntry>, HeapOrder> heap_;
  NodeId head_;
  double best_lower_ = -std::numeric_limits<double>::infinity();
  std::size_t best_row_ = 0;
  RunTrace trace_;
  StopReason stop_ = StopReason::running;
  std::optional<std::size_t> tau_;
};

struct RunResult {
  RunOutcome outcome;
  RunTrace trace;
};

/// Runs the search against a deterministic environment until the
/// certificate drops to eps, the budget would be exceeded, or the depth limit
/// is reached.
RunResult run_cmfdoo(const HierarchicalPartition& partition, DeterministicEnvironment& env,
                     double L, const CostFunction& cost, double eps,
                     double budget = std::numeric_limits<double>::infinity(), int max_depth = 40);

/// Rounds t with xi_t < max f - f(x*_t) - tol, checked against `objective`.
std::vector<std::size_t> certificate_validity_check(const RunTrace& trace,
                                                    const ObjectiveSpec& objective,
                                                    double tol = 1e-12);

}  // namespace certmf
