#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "uescore/rng.hpp"
#include "uescore/types.hpp"

namespace testutil {

inline uescore::TokenTrace random_trace(uescore::Rng& rng, std::size_t min_len = 1,
                                        std::size_t max_len = 12,
                                        double min_prob = 1e-6) {
  static const char* kWords[] = {"red", "blue", "stone", "river", "gate",
                                 "cloud", "iron", "leaf", "moon", "spark"};
  const std::size_t length = min_len + rng.bounded(max_len - min_len + 1);
  uescore::TokenTrace trace;
  for (std::size_t i = 0; i < length; ++i) {
    trace.tokens.push_back(kWords[rng.bounded(std::size(kWords))]);
    trace.logprobs.push_back(std::log(rng.uniform(min_prob, 1.0)));
  }
  return trace;
}

inline uescore::QuestionSample random_sample(uescore::Rng& rng,
                                             std::size_t min_gens = 1,
                                             std::size_t max_gens = 6) {
  uescore::QuestionSample sample;
  sample.id = "s" + std::to_string(rng.bounded(1u << 30));
  sample.question = "question " + std::to_string(rng.bounded(1000));
  sample.model_id = "test-model";
  const std::size_t count = min_gens + rng.bounded(max_gens - min_gens + 1);
  for (std::size_t g = 0; g < count; ++g) {
    uescore::GenerationRecord gen;
    gen.trace = random_trace(rng);
    std::string text;
    for (const auto& token : gen.trace.tokens) {
      if (!text.empty()) text += ' ';
      text += token;
    }
    gen.text = text;
    gen.is_most_likely = g == 0;
    gen.label = static_cast<int>(rng.bounded(2));
    sample.generations.push_back(std::move(gen));
  }
  return sample;
}

/// O(n^2) pair-counting AUROC with the same final integer division as the
/// rank-based implementation, so agreement must be exact.
inline double brute_force_auroc(const std::vector<double>& uncertainties,
                                const std::vector<int>& labels) {
  std::uint64_t wins = 0, ties = 0, incorrect = 0, correct = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 0) {
      ++correct;
      continue;
    }
    ++incorrect;
    for (std::size_t j = 0; j < labels.size(); ++j) {
      if (labels[j] != 1) continue;
      if (uncertainties[i] > uncertainties[j]) ++wins;
      else if (uncertainties[i] == uncertainties[j]) ++ties;
    }
  }
  return static_cast<double>(2 * wins + ties) /
         static_cast<double>(2 * incorrect * correct);
}

}  // namespace testutil
