#include <benchmark/benchmark.h>

#include <vector>

#include "impactlab/drift.hpp"
#include "impactlab/model.hpp"
#include "impactlab/montecarlo.hpp"
#include "impactlab/oracles.hpp"
#include "impactlab/strategies.hpp"

using namespace impactlab;

namespace {

SamplePath poisson_path(std::size_t n) {
  return sample_path(CompensatedPoissonDerivative{20.0}, {MartingaleKind::brownian, 0.2},
                     TimeGrid::uniform(1.0, n), ModelParams{}, 7);
}

void BM_SamplePath(benchmark::State& state) {
  const TimeGrid grid = TimeGrid::uniform(1.0, static_cast<std::size_t>(state.range(0)));
  std::uint64_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(sample_path(CompensatedPoissonDerivative{20.0},
                                         {MartingaleKind::brownian, 0.2}, grid, ModelParams{}, 7,
                                         i++));
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_SamplePath)->RangeMultiplier(4)->Range(64, 4096)->Complexity();

void BM_CostDiscrete(benchmark::State& state) {
  const SamplePath s = poisson_path(static_cast<std::size_t>(state.range(0)));
  const ModelParams p;
  const auto s0 = s.unaffected();
  const auto xi = ow_strategy(p, s.grid).trades();
  for (auto _ : state) benchmark::DoNotOptimize(cost_discrete(xi, s0, s.grid, p));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_CostDiscrete)->RangeMultiplier(4)->Range(64, 4096)->Complexity();

void BM_Theorem1(benchmark::State& state) {
  const SamplePath s = poisson_path(static_cast<std::size_t>(state.range(0)));
  const ModelParams p;
  const DriftModel m = CompensatedPoissonDerivative{20.0};
  for (auto _ : state) benchmark::DoNotOptimize(optimal_strategy_theorem1(m, s, p));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Theorem1)->RangeMultiplier(4)->Range(64, 4096)->Complexity();

void BM_QpOracle(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  const SamplePath s = sample_path(LinearDrift{4.0}, {MartingaleKind::brownian, 0.0},
                                   TimeGrid::uniform(1.0, n), ModelParams{}, 1);
  const ModelParams p;
  for (auto _ : state) benchmark::DoNotOptimize(qp_oracle(s.a, s.grid, p));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_QpOracle)->RangeMultiplier(4)->Range(16, 1024)->Complexity();

void BM_DpOracle(benchmark::State& state) {
  const TimeGrid grid = TimeGrid::uniform(1.0, static_cast<std::size_t>(state.range(0)));
  const DriftChain chain = poisson_chain(20.0, grid);
  const ModelParams p;
  for (auto _ : state) benchmark::DoNotOptimize(dp_oracle(chain, grid, p));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_DpOracle)->RangeMultiplier(2)->Range(32, 128)->Complexity();

void BM_EstimateExpectedCost(benchmark::State& state) {
  const SimulationSetup setup{CompensatedPoissonDerivative{20.0},
                              {MartingaleKind::brownian, 0.2},
                              TimeGrid::uniform(1.0, 256),
                              ModelParams{},
                              {}};
  const McConfig config{static_cast<std::size_t>(state.range(0)), 3, 1};
  const StrategyBuilder builder = [&](const SamplePath& s) {
    return optimal_strategy_theorem1(setup.model, s, setup.params);
  };
  for (auto _ : state) benchmark::DoNotOptimize(estimate_expected_cost(builder, setup, config));
}
BENCHMARK(BM_EstimateExpectedCost)->Arg(1000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
