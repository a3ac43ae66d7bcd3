#include "pded/bo.hpp"
#include "pded/fit.hpp"
#include "pded/numerics.hpp"
#include "pded/rng.hpp"
#include "pded/solver.hpp"

#include <benchmark/benchmark.h>

#include <memory>

using namespace pded;

namespace {

std::shared_ptr<const Dataset> fisher() {
  static const auto d = std::make_shared<const Dataset>(generate(default_spec(PdeKind::Fisher)));
  return d;
}

std::vector<Observation> observations(int n, int k) {
  CounterRng rng(1);
  std::vector<Observation> obs;
  for (int i = 0; i < n; ++i) obs.push_back({1 + static_cast<int>(rng.below(k)), rng.uniform01()});
  return obs;
}

}  // namespace

static void BM_Differentiate(benchmark::State& state) {
  const auto d = fisher();
  const int order = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(differentiate(*d, order, Axis::X));
}
BENCHMARK(BM_Differentiate)->Arg(1)->Arg(2)->Arg(3);

static void BM_FeatureCache(benchmark::State& state) {
  const auto d = fisher();
  for (auto _ : state) benchmark::DoNotOptimize(FeatureCache(d));
}
BENCHMARK(BM_FeatureCache);

static void BM_Stridge(benchmark::State& state) {
  const FeatureCache cache(fisher());
  const auto problem = cache.build_problem(parse_equation("u_t = u + u^2 + u_xx + u*u_x + u_x + u^3"), Split::Train);
  const StridgeConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(stridge(problem, cfg));
}
BENCHMARK(BM_Stridge);

static void BM_FitGp(benchmark::State& state) {
  const auto obs = observations(static_cast<int>(state.range(0)), 100);
  for (auto _ : state) benchmark::DoNotOptimize(fit_gp(obs, KernelKind::IndexRBF, 100));
}
BENCHMARK(BM_FitGp)->Arg(20)->Arg(100)->Arg(300);

static void BM_SelectStrategy(benchmark::State& state) {
  const auto obs = observations(static_cast<int>(state.range(0)), 100);
  const GPState gp = fit_gp(obs, KernelKind::IndexRBF, 100);
  for (auto _ : state) benchmark::DoNotOptimize(select_strategy(gp, 100, 0.9));
}
BENCHMARK(BM_SelectStrategy)->Arg(20)->Arg(100)->Arg(300);

BENCHMARK_MAIN();
