#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace uescore {

/// Natural-log floor applied to every stored token probability; keeps
/// exp(logprob) >= 1e-300 so downstream log-space math never sees -inf.
double min_log_prob();

/// Answer tokens with their natural-log probabilities, aligned index by index.
struct TokenTrace {
  std::vector<std::string> tokens;
  std::vector<double> logprobs;  // each <= 0 and >= min_log_prob()

  std::size_t length() const { return tokens.size(); }

  /// Throws Error naming the first violated invariant.
  void validate() const;

  bool operator==(const TokenTrace&) const = default;
};

/// One sampled generation for a question.
struct GenerationRecord {
  TokenTrace trace;
  std::string text;            // detokenized answer, taken as given
  bool is_most_likely = false;
  std::optional<int> label;    // 1 = correct, 0 = incorrect, nullopt = unknown

  void validate() const;

  bool operator==(const GenerationRecord&) const = default;
};

/// A question plus the generations sampled from one model for it.
struct QuestionSample {
  std::string id;
  std::string question;
  std::string model_id;  // opaque generator identifier
  std::vector<GenerationRecord> generations;

  void validate() const;

  /// Index of the generation flagged most likely; throws Error if absent.
  std::size_t most_likely_index() const;
  const GenerationRecord& most_likely() const;

  bool operator==(const QuestionSample&) const = default;
};

/// Labeled (question, answer trace) pair used to fit the trainable scorer.
struct CalibrationExample {
  std::string question;
  TokenTrace answer_trace;
  int label = 0;  // 1 = correct, 0 = incorrect

  void validate() const;

  bool operator==(const CalibrationExample&) const = default;
};

}  // namespace uescore
