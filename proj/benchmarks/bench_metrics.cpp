#include <benchmark/benchmark.h>

#include <vector>

#include "uescore/metrics.hpp"
#include "uescore/rng.hpp"

namespace {

void Auroc(benchmark::State& state) {
  uescore::Rng rng(3);
  const auto n = static_cast<std::size_t>(state.range(0));
  std::vector<double> uncertainties(n);
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    uncertainties[i] = rng.uniform(0, 1);
    labels[i] = static_cast<int>(rng.bounded(2));
  }
  labels[0] = 0;
  labels[1] = 1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(uescore::metrics::auroc(uncertainties, labels));
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(Auroc)->RangeMultiplier(4)->Range(256, 16384)->Complexity();

void Prr(benchmark::State& state) {
  uescore::Rng rng(4);
  const auto n = static_cast<std::size_t>(state.range(0));
  std::vector<double> uncertainties(n);
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    uncertainties[i] = rng.uniform(0, 1);
    labels[i] = static_cast<int>(rng.bounded(2));
  }
  labels[0] = 0;
  labels[1] = 1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(uescore::metrics::prr(uncertainties, labels));
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(Prr)->RangeMultiplier(4)->Range(256, 16384)->Complexity();

}  // namespace
