// SPDX-License-Identifier: Apache-2.0
//
// Parallel kernels and trial runner against their serial reference paths.
#include <benchmark/benchmark.h>

#include "robust_scatter/experiments.hpp"
#include "robust_scatter/kernels.hpp"

using namespace robust_scatter;

namespace {

struct Fixture {
  SampleSet x;
  std::vector<double> w;
  HermitianMatrix a;

  explicit Fixture(std::size_t n) : a(HermitianMatrix::identity(3)) {
    RngStream rng(7, n);
    x = sample_complex_gaussian(HermitianMatrix::identity(3), n, rng);
    w.resize(n);
    for (auto& v : w) v = rng.uniform();
  }
};

void BM_ScatterParallel(benchmark::State& state) {
  const Fixture f(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(kernels::weighted_scatter_sum(f.x, f.w));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_ScatterReference(benchmark::State& state) {
  const Fixture f(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(reference::weighted_scatter_sum(f.x, f.w));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_QuadFormsParallel(benchmark::State& state) {
  const Fixture f(static_cast<std::size_t>(state.range(0)));
  const Cholesky chol(f.a);
  for (auto _ : state) benchmark::DoNotOptimize(kernels::inverse_quad_forms(f.x, chol));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_QuadFormsReference(benchmark::State& state) {
  const Fixture f(static_cast<std::size_t>(state.range(0)));
  const HermitianMatrix inv = herm_inv(f.a);
  for (auto _ : state) benchmark::DoNotOptimize(reference::inverse_quad_forms(f.x, inv));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

ExperimentConfig runner_config() {
  ExperimentConfig cfg = default_config(ExperimentKind::AnmfVariance);
  cfg.n_grid = {50, 200};
  cfg.trials = 200;
  return cfg;
}

void BM_RunnerParallel(benchmark::State& state) {
  const ExperimentConfig cfg = runner_config();
  for (auto _ : state) benchmark::DoNotOptimize(run_experiment(cfg, RunOptions{0, false}));
}

void BM_RunnerSerial(benchmark::State& state) {
  const ExperimentConfig cfg = runner_config();
  for (auto _ : state) benchmark::DoNotOptimize(run_experiment(cfg, RunOptions{0, true}));
}

}  // namespace

BENCHMARK(BM_ScatterParallel)->Arg(1000)->Arg(100000);
BENCHMARK(BM_ScatterReference)->Arg(1000)->Arg(100000);
BENCHMARK(BM_QuadFormsParallel)->Arg(1000)->Arg(100000);
BENCHMARK(BM_QuadFormsReference)->Arg(1000)->Arg(100000);
BENCHMARK(BM_RunnerParallel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RunnerSerial)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
