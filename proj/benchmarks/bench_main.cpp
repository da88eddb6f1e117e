#include <benchmark/benchmark.h>

#include "meandev/deviation.hpp"
#include "meandev/equilibrium.hpp"
#include "meandev/market.hpp"
#include "meandev/validate.hpp"

using namespace meandev;

namespace {

MarketModel jump_market() {
  return MarketModel(0.03, {0.09}, Matrix{{0.2}}, Matrix{{0.3}}, LevyMeasure(1, {{{0.1}, 2.0}}));
}

MarketModel two_asset_market() {
  return MarketModel(0.02, {0.20, 0.06}, Matrix{{0.2, 0.0}, {0.0, 0.1}}, Matrix{{1.0, 0.0}, {0.0, 1.0}},
                     LevyMeasure(2, {{{0.3, -0.3}, 1.0}, {{-0.3, 0.3}, 1.0}}));
}

void BM_FixedPointSingleAsset(benchmark::State& state) {
  const auto m = jump_market();
  const auto g = Driver::joint_norm(1.0, m.measure());
  FixedPointOptions opts;
  opts.grid_size = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(fixed_point(m, g, 0.1, 40.0, opts).t_star);
}
BENCHMARK(BM_FixedPointSingleAsset)->Arg(1024)->Arg(4096)->Unit(benchmark::kMillisecond);

void BM_FixedPointTwoAsset(benchmark::State& state) {
  const auto m = two_asset_market();
  const auto g = Driver::joint_norm(1.0, m.measure());
  FixedPointOptions opts;
  opts.grid_size = static_cast<std::size_t>(state.range(0));
  opts.method = static_cast<FixedPointMethod>(state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(fixed_point(m, g, 0.1, 50.0, opts).t_star);
}
BENCHMARK(BM_FixedPointTwoAsset)
    ->Args({1024, static_cast<int>(FixedPointMethod::Jacobi)})
    ->Args({1024, static_cast<int>(FixedPointMethod::BackwardSweep)})
    ->Unit(benchmark::kMillisecond);

void BM_MaximizeBoundaryTwoAsset(benchmark::State& state) {
  const auto m = two_asset_market();
  const auto g = Driver::joint_norm(1.0, m.measure());
  double a = 3.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(maximize_boundary(m, g, a).value);
    a = a < 6.0 ? a + 1e-3 : 3.0;
  }
}
BENCHMARK(BM_MaximizeBoundaryTwoAsset);

void BM_Simulate(benchmark::State& state) {
  const auto m = jump_market();
  const auto p = Policy({0.0, 10.0, 40.0}, {{0.0}, {1.0}});
  Vector grid;
  for (int i = 0; i <= 64; ++i) grid.push_back(40.0 * i / 64.0);
  SimulationOptions opts;
  opts.record_jumps = false;
  for (auto _ : state)
    benchmark::DoNotOptimize(simulate(m, p, 1.0, grid, static_cast<std::size_t>(state.range(0)), 42, opts).wealth);
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Simulate)->Arg(10000)->Unit(benchmark::kMillisecond);

void BM_EstimateObjective(benchmark::State& state) {
  const auto m = jump_market();
  const auto g = Driver::joint_norm(1.0, m.measure());
  const auto p = Policy({0.0, 10.0, 40.0}, {{0.0}, {1.0}});
  MonteCarloOptions opts;
  opts.n_paths = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(estimate_objective(m, g, 0.1, p, 1.0, opts).objective.value);
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_EstimateObjective)->Arg(10000)->Unit(benchmark::kMillisecond);

void BM_GridDeviation(benchmark::State& state) {
  const auto pair = RepresentingPair::constant(1.0, {0.2}, JumpPayoff(Vector{0.25}), LevyMeasure(1, {{{0.5}, 4.0}}));
  GridDeviationSpec spec;
  spec.level = static_cast<int>(state.range(0));
  spec.samples = 20000;
  for (auto _ : state) benchmark::DoNotOptimize(grid_deviation(pair, spec).value);
}
BENCHMARK(BM_GridDeviation)->Arg(4)->Arg(6)->Unit(benchmark::kMillisecond);

void BM_GridDeviationGaussian(benchmark::State& state) {
  const auto pair = RepresentingPair::constant(1.0, {0.2}, JumpPayoff::zero(0), LevyMeasure(1));
  GridDeviationSpec spec;
  spec.level = 12;
  for (auto _ : state) benchmark::DoNotOptimize(grid_deviation(pair, spec).value);
}
BENCHMARK(BM_GridDeviationGaussian);

}  // namespace

BENCHMARK_MAIN();
