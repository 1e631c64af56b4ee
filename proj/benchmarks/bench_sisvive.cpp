#include <benchmark/benchmark.h>

#include "sisvive/estimator.hpp"
#include "sisvive/lasso_path.hpp"
#include "sisvive/projection.hpp"
#include "sisvive/simulation.hpp"

namespace {

using namespace sisvive;

Dataset study(Eigen::Index n, Eigen::Index l) {
  SimulationConfig cfg;
  cfg.n = n;
  cfg.l = l;
  cfg.s = l / 3;
  cfg.seed = 20150101;
  return preprocess(generate_dataset(cfg, 0).first).first;
}

void BM_Projector(benchmark::State& state) {
  const Dataset ds = study(state.range(0), state.range(1));
  for (auto _ : state) {
    const Projector p(ds.z());
    benchmark::DoNotOptimize(p.apply(ds.y()));
  }
}
BENCHMARK(BM_Projector)->Args({2000, 10})->Args({20000, 10})->Args({2000, 50});

void BM_LassoPath(benchmark::State& state) {
  const Dataset ds = study(state.range(0), state.range(1));
  const Projector pz(ds.z());
  const LassoProblem p = build_problem(ds.z(), pz.apply(ds.d()), pz.apply(ds.y()));
  for (auto _ : state) benchmark::DoNotOptimize(fit_path(p));
}
BENCHMARK(BM_LassoPath)->Args({2000, 10})->Args({2000, 50});

void BM_CvEstimate(benchmark::State& state) {
  const Dataset ds = study(state.range(0), state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(estimate(ds, 10, 1));
}
BENCHMARK(BM_CvEstimate)->Args({2000, 10})->Unit(benchmark::kMillisecond);

void BM_Replication(benchmark::State& state) {
  SimulationConfig cfg;
  cfg.seed = 20150101;
  std::uint64_t r = 0;
  for (auto _ : state) benchmark::DoNotOptimize(run_replication(cfg, r++));
}
BENCHMARK(BM_Replication)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
