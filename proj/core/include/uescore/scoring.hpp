#pragma once

#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "uescore/types.hpp"

namespace uescore::scoring {

/// Pseudo-probability in (0, 1], carried in log space.
///
/// log_value is canonical; value == exp(log_value). Construction clamps the
/// log to [ln(1e-300), 0] so every score stays strictly positive and finite.
struct Score {
  double value = 1.0;
  double log_value = 0.0;

  static Score from_log(double log_value);
};

/// Per-token non-negative weights, one per answer token.
struct WeightVector {
  std::vector<double> weights;

  void validate() const;  // throws Error on negative or non-finite entries
};

/// Symmetric text similarity in [0, 1].
using SimilarityFn = std::function<double(std::string_view, std::string_view)>;

/// Scoring-function interface shared by the closed-form scorers and the
/// trainable one: (question, generation) -> pseudo-probability.
using Scorer = std::function<Score(const std::string& question,
                                   const GenerationRecord& generation)>;

/// Product of token probabilities: log score = sum of logprobs.
Score sequence_prob(const TokenTrace& trace);

/// Geometric mean of token probabilities: log score = mean of logprobs.
Score length_normalized_score(const TokenTrace& trace);

/// Generalized weighted score: log score = sum of weight_l * logprob_l.
/// Uniform weights 1/L reduce this to length_normalized_score; unit weights
/// reduce it to sequence_prob. Throws Error on a length mismatch.
Score weighted_score(const TokenTrace& trace, const WeightVector& weights);

enum class WeightNormalize { kSumToOne, kNone };

/// Leave-one-out token relevance against a similarity oracle.
///
/// r_l = 1 - sim(question + answer, question + answer-without-token-l), with
/// the reduced answer built by joining the remaining trace tokens. kSumToOne
/// divides by the total relevance and falls back to uniform weights when every
/// r_l is zero.
WeightVector leave_one_out_weights(std::string_view question,
                                   const TokenTrace& trace,
                                   std::string_view answer_text,
                                   const SimilarityFn& sim,
                                   WeightNormalize normalize);

Scorer make_sequence_prob_scorer();
Scorer make_length_normalized_scorer();
/// Weighted scorer whose weights come from leave_one_out_weights per generation.
Scorer make_relevance_weighted_scorer(SimilarityFn sim, WeightNormalize normalize);

}  // namespace uescore::scoring
