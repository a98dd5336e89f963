#include "uescore/synth.hpp"

#include <array>
#include <cmath>

#include "uescore/errors.hpp"
#include "uescore/rng.hpp"

namespace uescore::synth {
namespace {

// Entity vocabulary for synthetic answers. Kept distinct from the marker and
// hedge words under the default 4096-entry hashed vocabulary.
constexpr std::array<const char*, 24> kEntities = {
    "amber",  "basalt", "cedar",   "delta",  "ember",  "fjord",
    "garnet", "harbor", "iris",    "jasper", "kelp",   "lagoon",
    "meadow", "nickel", "obsidian", "prairie", "quartz", "reef",
    "sage",   "tundra", "umber",   "vertex", "willow", "zephyr"};

constexpr const char* kHedgeWord = "maybe";
constexpr const char* kConfidentMarker = "certainly";
constexpr const char* kHesitantMarker = "perhaps";

std::string entity(Rng& rng) {
  return kEntities[static_cast<std::size_t>(rng.bounded(kEntities.size()))];
}

QuestionSample make_sample(std::string id, std::string question,
                           std::string model_id, std::vector<std::string> tokens,
                           std::vector<double> logprobs, int label) {
  std::string text;
  for (const auto& token : tokens) {
    if (!text.empty()) text += ' ';
    text += token;
  }
  GenerationRecord gen;
  gen.trace = TokenTrace{std::move(tokens), std::move(logprobs)};
  gen.text = std::move(text);
  gen.is_most_likely = true;
  gen.label = label;

  QuestionSample sample;
  sample.id = std::move(id);
  sample.question = std::move(question);
  sample.model_id = std::move(model_id);
  sample.generations.push_back(std::move(gen));
  sample.validate();
  return sample;
}

QuestionSample hedge_sample(std::size_t index, Rng& rng) {
  const std::size_t length = 3 + rng.bounded(4);  // 3..6 entity tokens
  std::vector<std::string> tokens;
  for (std::size_t i = 0; i < length; ++i) tokens.push_back(entity(rng));

  const bool hedged = rng.bounded(2) == 1;
  if (hedged) {
    tokens.insert(tokens.begin() +
                      static_cast<std::ptrdiff_t>(rng.bounded(tokens.size() + 1)),
                  kHedgeWord);
  }
  // The hedge word gets a probability as high as any other token, so the
  // geometric mean cannot tell hedged and unhedged answers apart.
  std::vector<double> logprobs;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    logprobs.push_back(std::log(rng.uniform(0.80, 0.99)));
  }
  return make_sample("hedge-" + std::to_string(index),
                     "what is the name of landmark " + std::to_string(index),
                     "synth-hedge", std::move(tokens), std::move(logprobs),
                     hedged ? 0 : 1);
}

QuestionSample marker_sample(std::size_t index, Rng& rng) {
  const bool confident_marker = rng.bounded(2) == 1;
  const bool high_probability = rng.bounded(2) == 1;
  const int label = confident_marker == high_probability ? 1 : 0;

  std::vector<std::string> tokens;
  tokens.push_back(confident_marker ? kConfidentMarker : kHesitantMarker);
  const std::size_t extra = 2 + rng.bounded(3);  // 2..4 entity tokens
  for (std::size_t i = 0; i < extra; ++i) tokens.push_back(entity(rng));

  std::vector<double> logprobs;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    logprobs.push_back(std::log(high_probability ? rng.uniform(0.80, 0.99)
                                                 : rng.uniform(0.30, 0.55)));
  }
  return make_sample("marker-" + std::to_string(index),
                     "what is written on plaque " + std::to_string(index),
                     "synth-marker", std::move(tokens), std::move(logprobs), label);
}

}  // namespace

Task task_from_name(const std::string& name) {
  if (name == "hedge") return Task::kHedge;
  if (name == "marker") return Task::kMarkerProbability;
  throw UsageError("unknown synthetic task '" + name + "' (expected hedge or marker)");
}

std::string task_name(Task task) {
  return task == Task::kHedge ? "hedge" : "marker";
}

std::vector<QuestionSample> generate(const SynthOptions& options) {
  if (options.count == 0) throw UsageError("synth: count must be positive");
  Rng rng(options.seed);
  std::vector<QuestionSample> samples;
  samples.reserve(options.count);
  for (std::size_t i = 0; i < options.count; ++i) {
    samples.push_back(options.task == Task::kHedge ? hedge_sample(i, rng)
                                                   : marker_sample(i, rng));
  }
  return samples;
}

}  // namespace uescore::synth
