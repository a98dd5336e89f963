#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "uescore/types.hpp"

namespace uescore::synth {

enum class Task {
  /// Answers where a high-probability hedge word flips the correctness label.
  /// Every token probability is drawn from the same range regardless of the
  /// label, so probability-only scorers carry no signal; the hedge word does.
  kHedge,
  /// Correctness depends jointly on a marker word AND the probability regime
  /// (label = marker XNOR high-probability). Text alone and probabilities
  /// alone are each uninformative; only their combination separates classes.
  kMarkerProbability,
};

Task task_from_name(const std::string& name);  // "hedge" | "marker"
std::string task_name(Task task);

struct SynthOptions {
  Task task = Task::kHedge;
  std::size_t count = 2000;
  std::uint64_t seed = 0;
};

/// One question per sample, one labeled most-likely generation each.
std::vector<QuestionSample> generate(const SynthOptions& options);

}  // namespace uescore::synth
