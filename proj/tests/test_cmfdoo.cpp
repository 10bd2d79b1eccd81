#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <set>

#include "certmf/cmfdoo.hpp"
#include "oracles.hpp"

using namespace certmf;

namespace {

ObjectiveSpec builtin(const std::string& name, std::size_t d) {
  return make_builtin(name, {}, SearchDomain::unit_cube(d));
}

oracle::Respond respond_mode(EnvironmentKind kind) {
  switch (kind) {
    case EnvironmentKind::pessimistic:
      return oracle::Respond::minus;
    case EnvironmentKind::optimistic:
      return oracle::Respond::plus;
    default:
      return oracle::Respond::exact;
  }
}

// Drives the engine one iteration at a time so properties can be checked at
// every iteration boundary.
struct Stepper {
  HierarchicalPartition partition;
  DeterministicEnvironment env;
  EnvironmentOracle oracle;
  CmfDoo engine;
  StopRule rule;

  Stepper(const ObjectiveSpec& f, EnvironmentKind kind, const CostFunction& cost, double eps)
      : partition(HierarchicalPartition::dyadic(f.domain)),
        env(kind, f),
        oracle(env, cost),
        engine(partition, oracle, f.L_declared),
        rule{eps, std::numeric_limits<double>::infinity(), 40} {
    engine.init(rule);
  }
};

}  // namespace

TEST_CASE("init examples") {
  const auto f = builtin("constant", 1);
  const auto part = HierarchicalPartition::dyadic(f.domain);
  DeterministicEnvironment env(EnvironmentKind::noiseless, f);
  EnvironmentOracle unit(env, CostFunction::constant(1.0));
  CmfDoo a(part, unit, 1.0);
  const TraceRow& r = a.init();
  CHECK(r.xi == 1.0);
  CHECK(r.alpha == 1.0);
  CHECK(r.cum_cost == 1.0);
  CHECK(r.rec == Point{0.5});
  CHECK(a.head().priority == 2.0);

  DeterministicEnvironment env2(EnvironmentKind::noiseless, f);
  EnvironmentOracle sq(env2, CostFunction::power_law(1.0, 2.0));
  CmfDoo b(part, sq, 1.0);
  CHECK(b.init().step_cost == 1.0);
  CHECK_THROWS_AS(b.init(), std::logic_error);
  CHECK_THROWS_AS(CmfDoo(part, sq, 0.0), std::invalid_argument);
}

TEST_CASE("certificate formula after a query") {
  const auto f = builtin("constant", 1);
  Stepper s(f, EnvironmentKind::noiseless, CostFunction::constant(1.0), 1e-9);
  s.engine.expand_step(s.rule);
  const auto& tr = s.engine.trace();
  REQUIRE(tr.size() == 3);
  // Mid-iteration the root is still the head: 2 - (-0.5).
  CHECK(tr[1].xi == 2.5);
  // After re-selection the head is (1,0): 1 - (-0.5).
  CHECK(tr[2].xi == 1.5);
}

TEST_CASE("constant f: certificate is 3 delta^h once depth h is complete") {
  const auto f = builtin("constant", 1);
  Stepper s(f, EnvironmentKind::noiseless, CostFunction::constant(1.0), 1e-9);
  std::size_t complete = 1;
  for (int h = 1; h <= 6; ++h) {
    complete += std::size_t{1} << h;
    while (s.engine.trace().size() < complete) s.engine.expand_step(s.rule);
    const auto& last = s.engine.trace().back();
    CHECK(s.engine.head().node.depth == h);
    CHECK(last.xi == doctest::Approx(3.0 * std::ldexp(1.0, -h)));
  }
}

TEST_CASE("golden constant run") {
  const auto f = builtin("constant", 1);
  const auto part = HierarchicalPartition::dyadic(f.domain);
  DeterministicEnvironment env(EnvironmentKind::noiseless, f);
  const auto res = run_cmfdoo(part, env, 1.0, CostFunction::constant(1.0), 0.25);
  CHECK(res.outcome.stop_reason == StopReason::certified);
  CHECK(res.outcome.sigma == 31.0);
  REQUIRE(res.outcome.tau.has_value());
  CHECK(*res.outcome.tau == 31);
  CHECK(res.outcome.final_xi == 0.1875);
  CHECK(res.outcome.final_rec == Point{0.03125});
  // Frozen certificate sequence (hand simulation): 1, then per iteration the
  // mid-iteration values followed by the post-selection value.
  const std::vector<double> expected_head = {1.0, 2.5, 1.5, 1.25, 1.25, 1.25, 0.75, 0.625, 0.625};
  for (std::size_t k = 0; k < expected_head.size(); ++k) CHECK(res.trace[k].xi == expected_head[k]);
  CHECK(res.trace[14].xi == 0.375);
  CHECK(res.trace[29].xi == 0.3125);
  CHECK(res.trace[30].xi == 0.1875);
}

TEST_CASE("engine matches the linear-scan reference") {
  for (const char* name : {"constant", "cone", "power", "plateau-cone"}) {
    for (std::size_t d : {1u, 2u}) {
      for (auto kind : {EnvironmentKind::noiseless, EnvironmentKind::pessimistic, EnvironmentKind::optimistic}) {
        for (int c = 0; c < 2; ++c) {
          const auto f = builtin(name, d);
          const auto cost = c == 0 ? CostFunction::constant(1.0) : CostFunction::power_law(1.0, 2.0);
          const double eps = 0.0625;
          const auto part = HierarchicalPartition::dyadic(f.domain);
          DeterministicEnvironment env(kind, f);
          const auto res = run_cmfdoo(part, env, f.L_declared, cost, eps);
          const auto ref = oracle::naive_cmfdoo(
              d, [&](const oracle::Vec& x) { return f(x); }, f.L_declared, [&](double a) { return cost(a); },
              eps, respond_mode(kind));
          CAPTURE(name);
          CAPTURE(d);
          REQUIRE(res.trace.size() == ref.size());
          for (std::size_t t = 0; t < ref.size(); ++t) {
            const auto& a = res.trace[t];
            const auto& b = ref[t];
            CHECK(a.node.depth == b.h);
            CHECK(a.node.index == b.i);
            CHECK(a.x == b.x);
            CHECK(a.alpha == b.alpha);
            CHECK(a.y == doctest::Approx(b.y).epsilon(1e-15));
            CHECK(a.cum_cost == doctest::Approx(b.cum_cost).epsilon(1e-12));
            CHECK(a.rec == b.rec);
            CHECK(a.xi == doctest::Approx(b.xi).epsilon(1e-12));
          }
        }
      }
    }
  }
}

TEST_CASE("run stopping examples") {
  const auto f = builtin("cone", 1);
  const auto part = HierarchicalPartition::dyadic(f.domain);
  {
    DeterministicEnvironment env(EnvironmentKind::noiseless, f);
    const auto res = run_cmfdoo(part, env, 1.0, CostFunction::power_law(1.0, 2.0), 1.0);
    CHECK(res.outcome.stop_reason == StopReason::certified);
    CHECK(*res.outcome.tau == 1);
    CHECK(res.outcome.sigma == 1.0);
  }
  {
    DeterministicEnvironment env(EnvironmentKind::noiseless, f);
    const auto res = run_cmfdoo(part, env, 1.0, CostFunction::constant(1.0), 0.5, 1.0);
    CHECK(res.outcome.stop_reason == StopReason::budget);
    CHECK_FALSE(res.outcome.tau.has_value());
    CHECK(std::isinf(res.outcome.sigma));
    CHECK(res.outcome.total_cost <= 1.0);
  }
  {
    DeterministicEnvironment env(EnvironmentKind::noiseless, f);
    const auto res = run_cmfdoo(part, env, 1.0, CostFunction::constant(1.0), 1e-6,
                                std::numeric_limits<double>::infinity(), 3);
    CHECK(res.outcome.stop_reason == StopReason::depth_limit);
    for (const auto& row : res.trace) CHECK(row.node.depth <= 3);
  }
  DeterministicEnvironment env(EnvironmentKind::noiseless, f);
  CHECK_THROWS_AS(run_cmfdoo(part, env, 1.0, CostFunction::constant(1.0), 0.0), std::invalid_argument);
}

TEST_CASE("infeasible children are skipped") {
  const SearchDomain dom(Box{{0.0}, {1.0}}, Norm::sup, [](std::span<const double> x) { return x[0] <= 0.55; });
  const auto f = make_user_objective(
      "line", [](std::span<const double> x) { return x[0]; }, dom, 1.0, 1.0, 0.01);
  const HierarchicalPartition part(dom, PartitionConstants{2, 0.5, 1.0, 0.5});
  DeterministicEnvironment env(EnvironmentKind::noiseless, f);
  EnvironmentOracle oracle(env, CostFunction::constant(1.0));
  CmfDoo engine(part, oracle, 1.0);
  engine.init();
  engine.expand_step();
  REQUIRE(engine.trace().size() == 2);
  CHECK(engine.trace()[1].node == NodeId{1, 0});
  CHECK(engine.leaves() == std::vector<NodeId>{{1, 0}});
}

TEST_CASE("run invariants over the builtin suite") {
  for (const char* name : {"constant", "cone", "power", "plateau-cone"}) {
    for (std::size_t d : {1u, 2u}) {
      for (auto kind : {EnvironmentKind::noiseless, EnvironmentKind::pessimistic, EnvironmentKind::optimistic,
                        EnvironmentKind::collaborative}) {
        const auto f = builtin(name, d);
        Stepper s(f, kind, CostFunction::power_law(1.0, 2.0), d == 1 ? 1.0 / 64 : 1.0 / 16);
        double prev_best = -std::numeric_limits<double>::infinity();
        while (true) {
          // Optimism of the head.
          CHECK(s.engine.head().priority >= f.f_max - 1e-12);
          CHECK(s.engine.best_lower_bound() >= prev_best);
          prev_best = s.engine.best_lower_bound();
          // Leaf cover on a probe grid, while the tree is shallow enough.
          const auto leaves = s.engine.leaves();
          if (!leaves.empty() && leaves.back().depth <= 6) {
            std::vector<Box> cells;
            for (auto n : leaves) cells.push_back(s.partition.cell_of(n));
            for (const auto& p : oracle::unit_grid(d, d == 1 ? 64 : 16)) {
              bool covered = false;
              for (const auto& c : cells) covered = covered || c.contains(p);
              CHECK(covered);
            }
          }
          if (s.engine.expand_step(s.rule) != StopReason::running) break;
        }
        const auto& tr = s.engine.trace();
        CHECK(s.engine.stop_reason() == StopReason::certified);
        std::set<std::pair<int, std::uint64_t>> seen;
        double prev_cost = 0.0;
        for (const auto& row : tr) {
          CHECK(row.alpha == s.engine.accuracy(row.node.depth));
          CHECK(row.alpha == std::ldexp(f.L_declared, -row.node.depth));
          CHECK(row.xi >= 0.0);
          CHECK(row.cum_cost >= prev_cost);
          prev_cost = row.cum_cost;
          CHECK(seen.insert({row.node.depth, row.node.index}).second);
        }
        CHECK(certificate_validity_check(tr, f).empty());
        const auto out = s.engine.outcome();
        CHECK(out.sigma == tr[*out.tau - 1].cum_cost);
        CHECK(tr[*out.tau - 1].xi <= s.rule.eps.value());
      }
    }
  }
}

TEST_CASE("certificates are valid for the hidden bumped function") {
  BuiltinParams p;
  p.lipschitz_bound = 2.0;
  const auto f = make_builtin("cone", p, SearchDomain::unit_cube(1));
  const auto bump = make_bump_params(f, Point{0.75}, 0.1, 1);
  DeterministicEnvironment env(EnvironmentKind::bump, f, bump);
  const auto part = HierarchicalPartition::dyadic(f.domain);
  const auto res = run_cmfdoo(part, env, 2.0, CostFunction::constant(1.0), 0.05);
  CHECK(res.outcome.stop_reason == StopReason::certified);
  const auto& g = env.hidden_objective();
  CHECK(certificate_validity_check(res.trace, g, 2.0 * 1e-3).empty());
  CHECK(env.violations() > 0);
}

TEST_CASE("stop reason names") {
  CHECK(to_string(StopReason::certified) == "certified");
  CHECK(to_string(StopReason::depth_limit) == "depth-limit");
  CHECK(to_string(StopReason::budget) == "budget");
}
