#include <benchmark/benchmark.h>

#include "uescore/calibration.hpp"
#include "uescore/lars.hpp"
#include "uescore/synth.hpp"

namespace {

using namespace uescore;

struct Fixture {
  lars::LarsModel model;
  std::vector<lars::LabeledInput> batch;

  static Fixture make() {
    synth::SynthOptions options;
    options.task = synth::Task::kMarkerProbability;
    options.count = 32;
    options.seed = 5;
    const auto examples = build_calibration_set(synth::generate(options), false);

    lars::LarsConfig config;  // library defaults: d = 64, 2 layers
    config.seed = 5;
    const auto partition = lars::fit_partition(examples, config.k, config.d);

    Fixture fixture{lars::init_model(config, partition), {}};
    for (const auto& example : examples) {
      fixture.batch.push_back(lars::prepare_example(config, partition, example));
    }
    return fixture;
  }
};

void ModelForward(benchmark::State& state) {
  const auto fixture = Fixture::make();
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        lars::forward(fixture.model, fixture.batch[i++ % fixture.batch.size()].input));
  }
}
BENCHMARK(ModelForward);

void ModelLossAndGradients(benchmark::State& state) {
  const auto fixture = Fixture::make();
  const std::vector<lars::LabeledInput> batch(fixture.batch.begin(),
                                              fixture.batch.begin() + 8);
  for (auto _ : state) {
    benchmark::DoNotOptimize(lars::loss_and_gradients(fixture.model, batch));
  }
}
BENCHMARK(ModelLossAndGradients);

}  // namespace
