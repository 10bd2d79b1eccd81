#include <benchmark/benchmark.h>

#include <cmath>
#include <random>

#include "certmf/cmfdoo.hpp"
#include "certmf/cmfstooo.hpp"
#include "certmf/complexity.hpp"

using namespace certmf;

namespace {

void BM_CmfDooCone(benchmark::State& state) {
  const auto d = static_cast<std::size_t>(state.range(0));
  const double eps = std::ldexp(1.0, -static_cast<int>(state.range(1)));
  const auto f = make_builtin("cone", {}, SearchDomain::unit_cube(d));
  const auto part = HierarchicalPartition::dyadic(f.domain);
  std::size_t evals = 0;
  for (auto _ : state) {
    DeterministicEnvironment env(EnvironmentKind::pessimistic, f);
    const auto res = run_cmfdoo(part, env, 1.0, CostFunction::power_law(1.0, 2.0), eps);
    evals += res.trace.size();
    benchmark::DoNotOptimize(res.outcome.sigma);
  }
  state.counters["evals/s"] = benchmark::Counter(static_cast<double>(evals), benchmark::Counter::kIsRate);
}
BENCHMARK(BM_CmfDooCone)->Args({1, 8})->Args({1, 14})->Args({2, 5})->Args({2, 8});

void BM_CmfDooConstant(benchmark::State& state) {
  const double eps = std::ldexp(1.0, -static_cast<int>(state.range(0)));
  const auto f = make_builtin("constant", {}, SearchDomain::unit_cube(1));
  const auto part = HierarchicalPartition::dyadic(f.domain);
  for (auto _ : state) {
    DeterministicEnvironment env(EnvironmentKind::noiseless, f);
    benchmark::DoNotOptimize(run_cmfdoo(part, env, 1.0, CostFunction::constant(1.0), eps).outcome.sigma);
  }
}
BENCHMARK(BM_CmfDooConstant)->Arg(6)->Arg(10)->Arg(14);

void BM_Stochastic(benchmark::State& state) {
  const auto f = make_builtin("cone", {}, SearchDomain::unit_cube(1));
  const auto part = HierarchicalPartition::dyadic(f.domain);
  StoRunConfig c;
  c.eps = std::ldexp(1.0, -static_cast<int>(state.range(0)));
  std::uint64_t seed = 0;
  for (auto _ : state) {
    c.seed = seed++;
    benchmark::DoNotOptimize(run_stochastic(part, f, c).outcome.total_samples);
  }
}
BENCHMARK(BM_Stochastic)->Arg(2)->Arg(5);

void BM_ComplexityProfile(benchmark::State& state) {
  const auto d = static_cast<std::size_t>(state.range(0));
  const double eps = std::ldexp(1.0, -static_cast<int>(state.range(1)));
  const auto f = make_builtin("cone", {}, SearchDomain::unit_cube(d));
  for (auto _ : state) benchmark::DoNotOptimize(complexity_profile(f, 1.0, eps, eps / 10.0).base_packing);
}
BENCHMARK(BM_ComplexityProfile)->Args({1, 8})->Args({2, 4})->Args({2, 6})->Unit(benchmark::kMillisecond);

void BM_GreedyPacking(benchmark::State& state) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> coords(static_cast<std::size_t>(state.range(0)) * 2);
  for (auto& c : coords) c = u(rng);
  for (auto _ : state) benchmark::DoNotOptimize(packing_number_flat(coords, 2, 0.01, Norm::sup));
}
BENCHMARK(BM_GreedyPacking)->Arg(1000)->Arg(100000);

void BM_ExactPacking(benchmark::State& state) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Point> pts(static_cast<std::size_t>(state.range(0)), Point(2));
  for (auto& p : pts) {
    for (auto& c : p) c = u(rng);
  }
  for (auto _ : state) benchmark::DoNotOptimize(exact_packing_number(pts, 0.2, Norm::sup));
}
BENCHMARK(BM_ExactPacking)->Arg(10)->Arg(20);

void BM_EnvelopeErr(benchmark::State& state) {
  const auto f = make_builtin("cone", {}, SearchDomain::unit_cube(1));
  const auto part = HierarchicalPartition::dyadic(f.domain);
  DeterministicEnvironment env(EnvironmentKind::noiseless, f);
  const auto res = run_cmfdoo(part, env, 1.0, CostFunction::constant(1.0), 1.0 / 64);
  for (auto _ : state) {
    EnvelopeTracker tracker(f.domain, 1.0, 1.0 / 1024);
    for (const auto& row : res.trace) tracker.add(row.x, row.alpha, row.y);
    benchmark::DoNotOptimize(tracker.err(res.trace.back().rec));
  }
}
BENCHMARK(BM_EnvelopeErr);

}  // namespace
BENCHMARK_MAIN();
