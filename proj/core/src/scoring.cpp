#include "uescore/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>

#include "uescore/errors.hpp"

namespace uescore::scoring {

Score Score::from_log(double log_value) {
  log_value = std::clamp(log_value, min_log_prob(), 0.0);
  return Score{std::exp(log_value), log_value};
}

void WeightVector::validate() const {
  for (double w : weights) {
    if (!std::isfinite(w) || w < 0.0) {
      throw Error("weights must be finite and non-negative");
    }
  }
}

Score sequence_prob(const TokenTrace& trace) {
  trace.validate();
  return Score::from_log(
      std::accumulate(trace.logprobs.begin(), trace.logprobs.end(), 0.0));
}

Score length_normalized_score(const TokenTrace& trace) {
  trace.validate();
  const double sum =
      std::accumulate(trace.logprobs.begin(), trace.logprobs.end(), 0.0);
  return Score::from_log(sum / static_cast<double>(trace.length()));
}

Score weighted_score(const TokenTrace& trace, const WeightVector& weights) {
  trace.validate();
  weights.validate();
  if (weights.weights.size() != trace.length()) {
    throw Error("weighted_score: " + std::to_string(weights.weights.size()) +
                " weights for " + std::to_string(trace.length()) + " tokens");
  }
  double log_score = 0.0;
  for (std::size_t i = 0; i < trace.length(); ++i) {
    log_score += weights.weights[i] * trace.logprobs[i];
  }
  return Score::from_log(log_score);
}

namespace {

std::string join_tokens_skipping(const std::vector<std::string>& tokens,
                                 std::size_t skip) {
  std::string joined;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i == skip) continue;
    if (!joined.empty()) joined += ' ';
    joined += tokens[i];
  }
  return joined;
}

}  // namespace

WeightVector leave_one_out_weights(std::string_view question,
                                   const TokenTrace& trace,
                                   std::string_view answer_text,
                                   const SimilarityFn& sim,
                                   WeightNormalize normalize) {
  trace.validate();
  const std::size_t length = trace.length();
  const std::string full =
      std::string(question) + ' ' + std::string(answer_text);

  WeightVector result;
  result.weights.resize(length);
  double total = 0.0;
  for (std::size_t l = 0; l < length; ++l) {
    const std::string reduced =
        std::string(question) + ' ' + join_tokens_skipping(trace.tokens, l);
    const double relevance = 1.0 - sim(full, reduced);
    result.weights[l] = std::max(relevance, 0.0);
    total += result.weights[l];
  }

  if (normalize == WeightNormalize::kSumToOne) {
    if (total == 0.0) {
      const double uniform = 1.0 / static_cast<double>(length);
      std::fill(result.weights.begin(), result.weights.end(), uniform);
    } else {
      for (double& w : result.weights) w /= total;
    }
  }
  return result;
}

Scorer make_sequence_prob_scorer() {
  return [](const std::string&, const GenerationRecord& gen) {
    return sequence_prob(gen.trace);
  };
}

Scorer make_length_normalized_scorer() {
  return [](const std::string&, const GenerationRecord& gen) {
    return length_normalized_score(gen.trace);
  };
}

Scorer make_relevance_weighted_scorer(SimilarityFn sim,
                                      WeightNormalize normalize) {
  return [sim = std::move(sim), normalize](const std::string& question,
                                           const GenerationRecord& gen) {
    const WeightVector weights =
        leave_one_out_weights(question, gen.trace, gen.text, sim, normalize);
    return weighted_score(gen.trace, weights);
  };
}

}  // namespace uescore::scoring
