#include <benchmark/benchmark.h>

#include "pulse/catalog.hpp"
#include "pulse/funnel.hpp"
#include "pulse/integrator.hpp"
#include "pulse/jumpspace.hpp"
#include "pulse/problem.hpp"

namespace {

using namespace pulse;

void BM_SolveTrustFundsBangBang(benchmark::State& state) {
  const auto p = make_problem("trust-funds");
  const auto g = select_random(p.field, p.horizon, 7, static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(solve(p, g));
}
BENCHMARK(BM_SolveTrustFundsBangBang)->Arg(0)->Arg(3)->Arg(12);

void BM_SolveMollified(benchmark::State& state) {
  const auto p = make_problem("trust-funds");
  const auto g = mollified_center(p, static_cast<int>(state.range(0)), gronwall_bounds(p));
  for (auto _ : state) benchmark::DoNotOptimize(solve(p, g));
}
BENCHMARK(BM_SolveMollified)->Arg(4)->Arg(32);

void BM_Distance(benchmark::State& state) {
  const auto p = make_problem("fixed-time-m3");
  const auto f = reduce(solve(p, select_random(p.field, p.horizon, 1, 3)));
  const auto g = reduce(solve(p, select_random(p.field, p.horizon, 2, 3)));
  for (auto _ : state) benchmark::DoNotOptimize(distance(f, g));
}
BENCHMARK(BM_Distance);

void BM_Transversality(benchmark::State& state) {
  const auto p = make_problem("trust-funds");
  GridSpec grid;
  grid.space_points = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(check_transversality(p, grid));
}
BENCHMARK(BM_Transversality)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_Funnel(benchmark::State& state) {
  const auto p = make_problem("trust-funds");
  const std::vector<Strategy> strategies{Strategy::parse("bangbang:3", p.dim())};
  const auto count = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(sample_funnel(p, strategies, count, 7));
}
BENCHMARK(BM_Funnel)->Arg(32)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
