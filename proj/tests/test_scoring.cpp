#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "uescore/errors.hpp"
#include "uescore/numerics.hpp"
#include "uescore/scoring.hpp"

using namespace uescore;
using namespace uescore::scoring;

TEST_SUITE("scoring") {

TEST_CASE("Score construction clamps and keeps value/log consistent") {
  const Score s = Score::from_log(-1.5);
  CHECK(s.log_value == -1.5);
  CHECK(s.value == doctest::Approx(std::exp(-1.5)).epsilon(1e-15));

  const Score floor = Score::from_log(-1e9);
  CHECK(floor.log_value == min_log_prob());
  CHECK(floor.value >= 1e-300);

  const Score top = Score::from_log(0.5);
  CHECK(top.log_value == 0.0);
  CHECK(top.value == 1.0);
}

TEST_CASE("sequence_prob multiplies token probabilities") {
  const TokenTrace half{{"a", "b"}, {std::log(0.5), std::log(0.5)}};
  CHECK(sequence_prob(half).value == doctest::Approx(0.25).epsilon(1e-12));

  const TokenTrace one{{"a"}, {0.0}};
  CHECK(sequence_prob(one).value == 1.0);

  const TokenTrace three{{"a", "b", "c"},
                         {std::log(0.9), std::log(0.8), std::log(0.7)}};
  CHECK(sequence_prob(three).value == doctest::Approx(0.504).epsilon(1e-12));
}

TEST_CASE("length_normalized_score is the geometric mean") {
  const TokenTrace half{{"a", "b"}, {std::log(0.5), std::log(0.5)}};
  CHECK(length_normalized_score(half).value == doctest::Approx(0.5).epsilon(1e-12));

  const TokenTrace ones{{"a", "b", "c"}, {0.0, 0.0, 0.0}};
  CHECK(length_normalized_score(ones).value == 1.0);

  const TokenTrace two{{"a", "b"}, {std::log(0.9), std::log(0.4)}};
  CHECK(length_normalized_score(two).value == doctest::Approx(0.6).epsilon(1e-12));
}

TEST_CASE("weighted_score fixtures") {
  const TokenTrace trace{{"a", "b"}, {std::log(0.9), std::log(0.1)}};
  CHECK(weighted_score(trace, WeightVector{{1.0, 0.0}}).value ==
        doctest::Approx(0.9).epsilon(1e-12));
  CHECK_THROWS_AS(weighted_score(trace, WeightVector{{1.0}}), Error);
  CHECK_THROWS_AS(weighted_score(trace, WeightVector{{1.0, -0.5}}), Error);
}

TEST_CASE("reduction identities over random traces") {
  Rng rng(101);
  for (int trial = 0; trial < 500; ++trial) {
    const TokenTrace trace = testutil::random_trace(rng);
    const double uniform = 1.0 / static_cast<double>(trace.length());
    WeightVector uniform_weights{std::vector<double>(trace.length(), uniform)};
    WeightVector unit_weights{std::vector<double>(trace.length(), 1.0)};

    CHECK(weighted_score(trace, uniform_weights).log_value ==
          doctest::Approx(length_normalized_score(trace).log_value).epsilon(1e-12));
    CHECK(weighted_score(trace, unit_weights).log_value ==
          doctest::Approx(sequence_prob(trace).log_value).epsilon(1e-12));
  }
}

TEST_CASE("raising one logprob strictly raises every score") {
  Rng rng(103);
  for (int trial = 0; trial < 100; ++trial) {
    TokenTrace trace = testutil::random_trace(rng, 2, 8, 1e-3);
    const std::size_t bump = rng.bounded(trace.length());
    // Keep strictly below 0 so the bump is not clipped away.
    trace.logprobs[bump] = std::min(trace.logprobs[bump], -0.5);

    TokenTrace bumped = trace;
    bumped.logprobs[bump] += 0.25;

    WeightVector positive{std::vector<double>(trace.length(), 0.0)};
    for (auto& w : positive.weights) w = rng.uniform(0.1, 2.0);

    CHECK(sequence_prob(bumped).log_value > sequence_prob(trace).log_value);
    CHECK(length_normalized_score(bumped).log_value >
          length_normalized_score(trace).log_value);
    CHECK(weighted_score(bumped, positive).log_value >
          weighted_score(trace, positive).log_value);
  }
}

TEST_CASE("length bias: constant traces") {
  // Per-token probability q: the geometric mean stays q at every length while
  // the sequence probability decays as q^L.
  const double q = 0.7;
  double prev_seq = 1.0;
  for (std::size_t length = 1; length <= 8; ++length) {
    TokenTrace trace;
    trace.tokens.assign(length, "t");
    trace.logprobs.assign(length, std::log(q));
    CHECK(length_normalized_score(trace).value == doctest::Approx(q).epsilon(1e-12));
    const double seq = sequence_prob(trace).value;
    CHECK(seq == doctest::Approx(std::pow(q, static_cast<double>(length))).epsilon(1e-9));
    CHECK(seq < prev_seq);
    prev_seq = seq;
  }
}

TEST_CASE("token permutation with matching weight permutation is invariant") {
  Rng rng(107);
  for (int trial = 0; trial < 100; ++trial) {
    TokenTrace trace = testutil::random_trace(rng, 2, 8);
    WeightVector weights{std::vector<double>(trace.length(), 0.0)};
    for (auto& w : weights.weights) w = rng.uniform(0.0, 2.0);

    std::vector<std::size_t> perm(trace.length());
    for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
    rng.shuffle(perm);

    TokenTrace shuffled;
    WeightVector shuffled_weights;
    for (std::size_t i : perm) {
      shuffled.tokens.push_back(trace.tokens[i]);
      shuffled.logprobs.push_back(trace.logprobs[i]);
      shuffled_weights.weights.push_back(weights.weights[i]);
    }

    CHECK(sequence_prob(shuffled).log_value ==
          doctest::Approx(sequence_prob(trace).log_value).epsilon(1e-12));
    CHECK(length_normalized_score(shuffled).log_value ==
          doctest::Approx(length_normalized_score(trace).log_value).epsilon(1e-12));
    CHECK(weighted_score(shuffled, shuffled_weights).log_value ==
          doctest::Approx(weighted_score(trace, weights).log_value).epsilon(1e-12));
  }
}

TEST_CASE("leave_one_out_weights: single token takes all relevance") {
  const TokenTrace trace{{"Paris"}, {std::log(0.9)}};
  const auto sim = [](std::string_view, std::string_view) { return 0.3; };
  const auto weights = leave_one_out_weights("capital of France?", trace, "Paris",
                                             sim, WeightNormalize::kSumToOne);
  REQUIRE(weights.weights.size() == 1);
  CHECK(weights.weights[0] == 1.0);
}

TEST_CASE("leave_one_out_weights: token judged irrelevant gets zero weight") {
  // Oracle that reports full similarity when "." is dropped, and less
  // otherwise; the "." token then carries zero relevance.
  const TokenTrace trace{{"Paris", "."}, {std::log(0.9), std::log(0.8)}};
  const auto sim = [](std::string_view, std::string_view reduced) {
    return reduced.find('.') == std::string_view::npos ? 1.0 : 0.5;
  };
  const auto weights = leave_one_out_weights("q", trace, "Paris .", sim,
                                             WeightNormalize::kSumToOne);
  REQUIRE(weights.weights.size() == 2);
  CHECK(weights.weights[0] == 1.0);  // sim stayed 0.5 when Paris was dropped
  CHECK(weights.weights[1] == 0.0);  // sim hit 1.0 when "." was dropped
}

TEST_CASE("leave_one_out_weights: default Rouge-L oracle yields uniform weights") {
  // Dropping any single token from a sequence leaves an LCS of L-1, so the
  // Rouge-L relevance is the same for every token and sum-to-one
  // normalization lands on uniform weights. Hand value: full is 8 tokens,
  // reduced is 7, F = 2*7/(8+7) = 14/15, so r = 1/15 per token.
  const TokenTrace trace{{"Paris", "."}, {std::log(0.9), std::log(0.8)}};
  const auto rouge = [](std::string_view a, std::string_view b) {
    return numerics::rouge_l_f(a, b);
  };
  const auto raw = leave_one_out_weights("what is the capital of France", trace,
                                         "Paris .", rouge, WeightNormalize::kNone);
  REQUIRE(raw.weights.size() == 2);
  CHECK(raw.weights[0] == doctest::Approx(1.0 / 15.0).epsilon(1e-12));
  CHECK(raw.weights[1] == doctest::Approx(1.0 / 15.0).epsilon(1e-12));

  const auto normalized = leave_one_out_weights(
      "what is the capital of France", trace, "Paris .", rouge,
      WeightNormalize::kSumToOne);
  CHECK(normalized.weights[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(normalized.weights[1] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("leave_one_out_weights: all-equal relevance normalizes to uniform") {
  const TokenTrace trace{{"a", "b", "c"},
                         {std::log(0.5), std::log(0.5), std::log(0.5)}};
  const auto sim = [](std::string_view, std::string_view) { return 0.25; };
  const auto weights =
      leave_one_out_weights("q", trace, "a b c", sim, WeightNormalize::kSumToOne);
  for (double w : weights.weights) CHECK(w == doctest::Approx(1.0 / 3.0));

  // Zero total relevance falls back to uniform as well.
  const auto all_one = [](std::string_view, std::string_view) { return 1.0; };
  const auto fallback =
      leave_one_out_weights("q", trace, "a b c", all_one, WeightNormalize::kSumToOne);
  for (double w : fallback.weights) CHECK(w == doctest::Approx(1.0 / 3.0));
}

}  // TEST_SUITE
