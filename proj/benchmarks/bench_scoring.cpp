#include <benchmark/benchmark.h>

#include <cmath>
#include <vector>

#include "uescore/numerics.hpp"
#include "uescore/rng.hpp"
#include "uescore/scoring.hpp"
#include "uescore/types.hpp"

namespace {

std::vector<uescore::TokenTrace> make_traces(std::size_t count, std::size_t length) {
  uescore::Rng rng(1);
  std::vector<uescore::TokenTrace> traces(count);
  for (auto& trace : traces) {
    for (std::size_t i = 0; i < length; ++i) {
      trace.tokens.push_back("tok" + std::to_string(i));
      trace.logprobs.push_back(std::log(rng.uniform(0.1, 1.0)));
    }
  }
  return traces;
}

void LengthNormalizedScore(benchmark::State& state) {
  const auto traces = make_traces(256, static_cast<std::size_t>(state.range(0)));
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        uescore::scoring::length_normalized_score(traces[i++ % traces.size()]));
  }
}
BENCHMARK(LengthNormalizedScore)->Arg(8)->Arg(64)->Arg(512);

void RougeLF(benchmark::State& state) {
  const std::string a = "the quick brown fox jumps over the lazy dog near the river";
  const std::string b = "a quick brown dog jumps over a lazy fox by the river bank";
  for (auto _ : state) {
    benchmark::DoNotOptimize(uescore::numerics::rouge_l_f(a, b));
  }
}
BENCHMARK(RougeLF);

void JacobiEigen(benchmark::State& state) {
  uescore::Rng rng(2);
  const auto n = static_cast<Eigen::Index>(state.range(0));
  Eigen::MatrixXd a(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      a(i, j) = a(j, i) = rng.uniform(-1, 1);
    }
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(uescore::numerics::symmetric_eigen(a));
  }
}
BENCHMARK(JacobiEigen)->Arg(5)->Arg(16)->Arg(32);

}  // namespace

BENCHMARK_MAIN();
