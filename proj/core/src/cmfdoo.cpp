#include "certmf/cmfdoo.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace certmf {

std::string_view to_string(StopReason reason) {
  switch (reason) {
    case StopReason::running:
      return "running";
    case StopReason::certified:
      return "certified";
    case StopReason::budget:
      return "budget";
    case StopReason::depth_limit:
      return "depth-limit";
  }
  return "?";
}

CmfDoo::CmfDoo(const HierarchicalPartition& partition, QueryOracle& oracle, double L)
    : partition_(partition), oracle_(oracle), L_(L) {
  if (!(L_ > 0.0)) throw std::invalid_argument("cmfdoo: L must be > 0");
}

double CmfDoo::accuracy(int depth) const {
  return L_ * partition_.radius() * std::pow(partition_.delta(), depth);
}

const TraceRow& CmfDoo::init(const StopRule& rule) {
  if (initialized()) throw std::logic_error("cmfdoo: already initialized");
  const NodeId root{0, 0};
  auto x = partition_.representative(root);
  if (!x) throw std::invalid_argument("cmfdoo: root cell has no feasible representative");
  const double alpha = accuracy(0);
  const double price = oracle_.price(root, alpha);
  if (price > rule.budget) {
    throw std::invalid_argument("cmfdoo: budget does not cover the first query");
  }
  const auto obs = oracle_.observe(1, root, *x, alpha);

  TraceRow row;
  row.t = 1;
  row.node = root;
  row.x = *x;
  row.alpha = alpha;
  row.y = obs.y;
  row.step_cost = price;
  row.cum_cost = price;
  row.m = obs.m;
  row.cum_samples = obs.m;
  row.rec = *x;
  row.xi = L_ * partition_.radius();
  trace_.push_back(row);

  best_lower_ = obs.y - alpha;
  best_row_ = 0;
  const double a = accuracy(0);
  LeafRecord leaf{root, *x, obs.y, alpha, obs.y + a + alpha};
  heap_.push({leaf.priority, 0, 0});
  leaves_.emplace(key(root), std::move(leaf));
  head_ = root;

  if (rule.eps && trace_.back().xi <= *rule.eps) finish(StopReason::certified, rule);
  return trace_.front();
}

double CmfDoo::certificate() const {
  return head().priority - best_lower_;
}

bool CmfDoo::query(NodeId node, const Point& x, const StopRule& rule) {
  const double alpha = accuracy(node.depth);
  const double price = oracle_.price(node, alpha);
  const TraceRow& last = trace_.back();
  if (last.cum_cost + price > rule.budget) {
    finish(StopReason::budget, rule);
    return false;
  }
  const std::size_t t = trace_.size() + 1;
  const auto obs = oracle_.observe(t, node, x, alpha);

  // Running argmax of the lower bounds y_s - alpha_s; ties keep the earliest.
  if (obs.y - alpha > best_lower_) {
    best_lower_ = obs.y - alpha;
    best_row_ = trace_.size();
  }
  const double a = accuracy(node.depth);
  LeafRecord leaf{node, x, obs.y, alpha, obs.y + a + alpha};
  heap_.push({leaf.priority, node.depth, node.index});
  leaves_.emplace(key(node), std::move(leaf));

  TraceRow row;
  row.t = t;
  row.node = node;
  row.x = x;
  row.alpha = alpha;
  row.y = obs.y;
  row.step_cost = price;
  row.cum_cost = last.cum_cost + price;
  row.m = obs.m;
  row.cum_samples = last.cum_samples + obs.m;
  row.rec = best_row_ == trace_.size() ? x : trace_[best_row_].x;
  row.xi = certificate();
  trace_.push_back(std::move(row));

  if (rule.eps && trace_.back().xi <= *rule.eps) {
    finish(StopReason::certified, rule);
    return false;
  }
  return true;
}

void CmfDoo::select_head() {
  while (!heap_.empty()) {
    const HeapEntry& top = heap_.top();
    if (leaves_.contains(Key{top.depth, top.index})) {
      head_ = NodeId{top.depth, top.index};
      return;
    }
    heap_.pop();
  }
  throw std::logic_error("cmfdoo: leaf set is empty");
}

StopReason CmfDoo::expand_step(const StopRule& rule) {
  if (!initialized()) throw std::logic_error("cmfdoo: expand_step before init");
  if (stop_ != StopReason::running) return stop_;
  const NodeId parent = head_;
  if (parent.depth + 1 > rule.max_depth || parent.depth + 1 > partition_.max_addressable_depth()) {
    finish(StopReason::depth_limit, rule);
    return stop_;
  }
  for (const NodeId child : children(parent, partition_.arity())) {
    auto x = partition_.representative(child);
    if (!x) continue;
    if (!query(child, *x, rule)) return stop_;
  }
  leaves_.erase(key(parent));
  select_head();
  trace_.back().xi = certificate();
  if (rule.eps && trace_.back().xi <= *rule.eps) finish(StopReason::certified, rule);
  return stop_;
}

void CmfDoo::finish(StopReason reason, const StopRule&) {
  stop_ = reason;
  if (reason == StopReason::certified) tau_ = trace_.size();
}

std::vector<NodeId> CmfDoo::leaves() const {
  std::vector<NodeId> out;
  out.reserve(leaves_.size());
  for (const auto& [k, leaf] : leaves_) out.push_back(leaf.node);
  std::sort(out.begin(), out.end(), [](NodeId a, NodeId b) {
    return a.depth != b.depth ? a.depth < b.depth : a.index < b.index;
  });
  return out;
}

RunOutcome CmfDoo::outcome() const {
  RunOutcome out;
  out.stop_reason = stop_;
  out.tau = tau_;
  out.n_evals = trace_.size();
  if (!trace_.empty()) {
    out.final_rec = trace_.back().rec;
    out.final_xi = trace_.back().xi;
    out.total_cost = trace_.back().cum_cost;
    out.total_samples = trace_.back().cum_samples;
  }
  if (tau_) out.sigma = trace_[*tau_ - 1].cum_cost;
  return out;
}

RunResult run_cmfdoo(const HierarchicalPartition& partition, DeterministicEnvironment& env,
                     double L, const CostFunction& cost, double eps, double budget,
                     int max_depth) {
  if (!(eps > 0.0)) throw std::invalid_argument("run: eps must be > 0");
  if (!(budget > 0.0)) throw std::invalid_argument("run: budget must be > 0");
  EnvironmentOracle oracle(env, cost);
  CmfDoo engine(partition, oracle, L);
  const StopRule rule{eps, budget, max_depth};
  engine.init(rule);
  while (engine.expand_step(rule) == StopReason::running) {
  }
  return {engine.outcome(), engine.trace()};
}

std::vector<std::size_t> certificate_validity_check(const RunTrace& trace,
                                                    const ObjectiveSpec& objective, double tol) {
  std::vector<std::size_t> bad;
  for (const auto& row : trace) {
    const double gap = objective.f_max - objective.eval(row.rec);
    if (row.xi < gap - tol) bad.push_back(row.t);
  }
  return bad;
}

}  // namespace certmf
