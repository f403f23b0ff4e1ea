// Parallel kernels against the serial reference.

#include <benchmark/benchmark.h>

#include <numeric>

#include "fairsel/kernels.hpp"
#include "fairsel/rng.hpp"

using namespace fairsel;

namespace {

struct Fixture {
  ModelParams params;
  Matrix x;
  std::vector<int> y;
  std::vector<std::size_t> rows;

  explicit Fixture(std::size_t n) : params(init_params(2, 32, 2, 1)), x(n, 2), y(n), rows(n) {
    rng::Engine e(2);
    for (double& v : x.values()) v = e.normal();
    for (int& v : y) v = static_cast<int>(e.below(2));
    std::iota(rows.begin(), rows.end(), std::size_t{0});
  }
};

void BM_PredictParallel(benchmark::State& state) {
  Fixture f(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(kernels::predict_proba(f.params, f.x, f.rows));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_PredictSerial(benchmark::State& state) {
  Fixture f(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(serial::predict_proba(f.params, f.x, f.rows));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_GradientParallel(benchmark::State& state) {
  Fixture f(static_cast<std::size_t>(state.range(0)));
  const BatchRef batch{f.x, f.y, f.rows};
  for (auto _ : state) benchmark::DoNotOptimize(kernels::loss_and_gradient(f.params, batch));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_GradientSerial(benchmark::State& state) {
  Fixture f(static_cast<std::size_t>(state.range(0)));
  const BatchRef batch{f.x, f.y, f.rows};
  for (auto _ : state) {
    benchmark::DoNotOptimize(serial::loss(f.params, batch));
    benchmark::DoNotOptimize(serial::gradient(f.params, batch));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK(BM_PredictParallel)->Arg(256)->Arg(4096)->Arg(95750);
BENCHMARK(BM_PredictSerial)->Arg(256)->Arg(4096)->Arg(95750);
BENCHMARK(BM_GradientParallel)->Arg(256)->Arg(4096)->Arg(95750);
BENCHMARK(BM_GradientSerial)->Arg(256)->Arg(4096)->Arg(95750);

BENCHMARK_MAIN();
