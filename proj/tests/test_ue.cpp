#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "uescore/errors.hpp"
#include "uescore/oracles.hpp"
#include "uescore/scoring.hpp"
#include "uescore/ue.hpp"

using namespace uescore;
using namespace uescore::ue;

namespace {

QuestionSample sample_with_scores(const std::vector<double>& values,
                                  const std::vector<std::string>& texts = {}) {
  QuestionSample sample;
  sample.id = "s";
  sample.question = "q";
  sample.model_id = "m";
  for (std::size_t i = 0; i < values.size(); ++i) {
    GenerationRecord gen;
    gen.trace = TokenTrace{{"tok"}, {std::log(values[i])}};
    gen.text = i < texts.size() ? texts[i] : "answer " + std::to_string(i);
    gen.is_most_likely = i == 0;
    gen.label = 1;
    sample.generations.push_back(std::move(gen));
  }
  return sample;
}

// Scores each generation by its single-token probability.
const scoring::Scorer kTokenScorer = [](const std::string&,
                                        const GenerationRecord& gen) {
  return scoring::sequence_prob(gen.trace);
};

}  // namespace

TEST_SUITE("ue") {

TEST_CASE("confidence is the negated most-likely score") {
  CHECK(confidence(sample_with_scores({1.0, 0.25}), kTokenScorer).value ==
        doctest::Approx(-1.0));

  const auto first = confidence(sample_with_scores({0.9}), kTokenScorer);
  const auto second = confidence(sample_with_scores({0.2}), kTokenScorer);
  CHECK(first.value < second.value);  // higher score, less uncertain

  QuestionSample no_top = sample_with_scores({0.5});
  no_top.generations[0].is_most_likely = false;
  CHECK_THROWS_AS(confidence(no_top, kTokenScorer), Error);
}

TEST_CASE("confidence with the length-normalized scorer") {
  QuestionSample sample = sample_with_scores({0.5});
  sample.generations[0].trace =
      TokenTrace{{"a", "b"}, {std::log(0.5), std::log(0.5)}};
  const auto scorer = scoring::make_length_normalized_scorer();
  CHECK(confidence(sample, scorer).value == doctest::Approx(-0.5).epsilon(1e-12));
}

TEST_CASE("entropy fixtures") {
  CHECK(entropy(sample_with_scores({1.0, 1.0, 1.0}), kTokenScorer, true).value ==
        doctest::Approx(0.0));
  CHECK(entropy(sample_with_scores({0.5, 0.5}), kTokenScorer, true).value ==
        doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(entropy(sample_with_scores({1.0, std::exp(-2.0)}), kTokenScorer, true).value ==
        doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("entropy selection flag") {
  const auto sample = sample_with_scores({1.0, 0.5});
  // Excluding the most likely leaves only the 0.5-probability generation.
  CHECK(entropy(sample, kTokenScorer, false).value ==
        doctest::Approx(std::log(2.0)).epsilon(1e-12));

  const auto only_top = sample_with_scores({0.9});
  CHECK_THROWS_AS(entropy(only_top, kTokenScorer, false), Error);
}

TEST_CASE("cluster_semantically fixtures") {
  const auto exact = oracles::make_exact_match_oracle();

  const auto same = sample_with_scores({0.5, 0.5, 0.5}, {"x", "x", "x"});
  CHECK(cluster_semantically(same, exact).group_count() == 1);

  const auto mixed = sample_with_scores({0.5, 0.5, 0.5}, {"4", "four", "5"});
  const auto oracle = [](std::string_view a, std::string_view b) {
    return a == b || (a == "4" && b == "four") || (a == "four" && b == "4");
  };
  const auto clusters = cluster_semantically(mixed, oracle);
  REQUIRE(clusters.group_count() == 2);
  CHECK(clusters.clusters[0] == std::vector<std::size_t>{0, 1});
  CHECK(clusters.clusters[1] == std::vector<std::size_t>{2});

  const auto never = [](std::string_view, std::string_view) { return false; };
  CHECK(cluster_semantically(mixed, never).group_count() == 3);
}

TEST_CASE("clustering requires equivalence in both directions") {
  const auto sample = sample_with_scores({0.5, 0.5}, {"a", "b"});
  // Asymmetric oracle: "a" entails "b" but not vice versa.
  const auto oneway = [](std::string_view premise, std::string_view hypothesis) {
    return premise == hypothesis || (premise == "a" && hypothesis == "b");
  };
  CHECK(cluster_semantically(sample, oneway).group_count() == 2);
}

TEST_CASE("semantic_entropy fixtures") {
  const auto sample = sample_with_scores({0.5, 0.5});
  Clustering one;
  one.clusters = {{0, 1}};
  CHECK(semantic_entropy(sample, kTokenScorer, one).value == doctest::Approx(0.0));

  Clustering singletons;
  singletons.clusters = {{0}, {1}};
  CHECK(semantic_entropy(sample, kTokenScorer, singletons).value ==
        doctest::Approx(std::log(2.0)).epsilon(1e-12));

  // Two clusters whose probabilities already sum to 1 each.
  const auto two = sample_with_scores({1.0, 1.0});
  Clustering pair;
  pair.clusters = {{0}, {1}};
  CHECK(semantic_entropy(two, kTokenScorer, pair).value == doctest::Approx(0.0));
}

TEST_CASE("semantic entropy with singleton clusters equals entropy") {
  Rng rng(211);
  const auto scorer = scoring::make_length_normalized_scorer();
  for (int trial = 0; trial < 200; ++trial) {
    const auto sample = testutil::random_sample(rng, 1, 6);
    Clustering singletons;
    for (std::size_t i = 0; i < sample.generations.size(); ++i) {
      singletons.clusters.push_back({i});
    }
    const double se = semantic_entropy(sample, scorer, singletons).value;
    const double h = entropy(sample, scorer, true).value;
    CHECK(se == doctest::Approx(h).epsilon(1e-12));
  }
}

TEST_CASE("sentsar fixtures and reductions") {
  const auto zero_sim = [](std::string_view, std::string_view) { return 0.0; };
  const auto one_sim = [](std::string_view, std::string_view) { return 1.0; };

  // Single generation: no neighbours regardless of temperature.
  const auto lone = sample_with_scores({0.5});
  CHECK(sentsar(lone, kTokenScorer, one_sim, 0.001).value ==
        doctest::Approx(entropy(lone, kTokenScorer, true).value));

  // Enhanced scores hit 1.0 for both generations.
  const auto pair = sample_with_scores({0.5, 0.5});
  CHECK(sentsar(pair, kTokenScorer, one_sim, 1.0).value == doctest::Approx(0.0));

  CHECK_THROWS_AS(sentsar(pair, kTokenScorer, one_sim, 0.0), Error);

  Rng rng(223);
  for (int trial = 0; trial < 200; ++trial) {
    const auto sample = testutil::random_sample(rng, 1, 6);
    CHECK(sentsar(sample, kTokenScorer, zero_sim, 0.5).value ==
          doctest::Approx(entropy(sample, kTokenScorer, true).value).epsilon(1e-12));
  }
}

TEST_CASE("higher scores never increase entropy-style aggregators") {
  Rng rng(227);
  const auto boosted = [](const std::string&, const GenerationRecord& gen) {
    // Strictly higher than kTokenScorer for every generation with p < 1.
    return scoring::Score::from_log(scoring::sequence_prob(gen.trace).log_value * 0.5);
  };
  const auto any_sim = [](std::string_view, std::string_view) { return 0.4; };
  for (int trial = 0; trial < 100; ++trial) {
    const auto sample = testutil::random_sample(rng, 2, 6);
    Clustering singletons;
    for (std::size_t i = 0; i < sample.generations.size(); ++i) {
      singletons.clusters.push_back({i});
    }
    CHECK(entropy(sample, boosted, true).value <=
          entropy(sample, kTokenScorer, true).value + 1e-12);
    CHECK(semantic_entropy(sample, boosted, singletons).value <=
          semantic_entropy(sample, kTokenScorer, singletons).value + 1e-12);
    CHECK(sentsar(sample, boosted, any_sim, 0.7).value <=
          sentsar(sample, kTokenScorer, any_sim, 0.7).value + 1e-12);
  }
}

TEST_CASE("aggregators stay finite on adversarial near-zero scores") {
  const auto tiny = [](const std::string&, const GenerationRecord&) {
    return scoring::Score::from_log(-1e9);  // clamps to 1e-300
  };
  const auto sample = sample_with_scores({0.5, 0.5, 0.5});
  Clustering singletons;
  singletons.clusters = {{0}, {1}, {2}};
  const auto sim = [](std::string_view, std::string_view) { return 0.0; };
  CHECK(std::isfinite(entropy(sample, tiny, true).value));
  CHECK(std::isfinite(semantic_entropy(sample, tiny, singletons).value));
  CHECK(std::isfinite(sentsar(sample, tiny, sim, 0.001).value));
  CHECK(std::isfinite(confidence(sample, tiny).value));
}

TEST_CASE("lexical_similarity fixtures") {
  CHECK(lexical_similarity(sample_with_scores({0.5, 0.5}, {"same", "same"})).value ==
        doctest::Approx(-1.0));
  CHECK(lexical_similarity(sample_with_scores({0.5, 0.5}, {"aa bb", "cc dd"})).value ==
        doctest::Approx(0.0));
  CHECK(lexical_similarity(sample_with_scores({0.5, 0.5}, {"a b c", "a c"})).value ==
        doctest::Approx(-0.8).epsilon(1e-12));
  CHECK_THROWS_AS(lexical_similarity(sample_with_scores({0.5})), Error);
}

TEST_CASE("num_semantic_groups counts clusters") {
  Clustering clustering;
  clustering.clusters = {{0, 1}, {2}};
  CHECK(num_semantic_groups(clustering).value == 2.0);
  clustering.clusters = {{0}};
  CHECK(num_semantic_groups(clustering).value == 1.0);
}

TEST_CASE("degree_uncertainty fixtures and range") {
  CHECK(degree_uncertainty(SimilarityMatrix(Eigen::MatrixXd::Ones(3, 3))).value ==
        doctest::Approx(0.0));
  CHECK(degree_uncertainty(SimilarityMatrix(Eigen::MatrixXd::Identity(2, 2))).value ==
        doctest::Approx(0.5));
  CHECK(degree_uncertainty(SimilarityMatrix(Eigen::MatrixXd::Ones(1, 1))).value ==
        doctest::Approx(0.0));

  Rng rng(229);
  for (int trial = 0; trial < 100; ++trial) {
    const auto n = static_cast<Eigen::Index>(1 + rng.bounded(6));
    Eigen::MatrixXd w = Eigen::MatrixXd::Identity(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = i + 1; j < n; ++j) {
        w(i, j) = w(j, i) = rng.uniform(0, 1);
      }
    }
    const double value = degree_uncertainty(SimilarityMatrix(w)).value;
    CHECK(value >= 0.0);
    CHECK(value <= static_cast<double>(n - 1) / static_cast<double>(n) + 1e-12);
  }
}

TEST_CASE("similarity matrix validation") {
  Eigen::MatrixXd bad_diag = Eigen::MatrixXd::Ones(2, 2);
  bad_diag(0, 0) = 0.5;
  CHECK_THROWS_AS(SimilarityMatrix{bad_diag}, Error);

  Eigen::MatrixXd asym = Eigen::MatrixXd::Identity(2, 2);
  asym(0, 1) = 0.5;
  asym(1, 0) = 0.6;
  CHECK_THROWS_AS(SimilarityMatrix{asym}, Error);

  Eigen::MatrixXd out_of_range = Eigen::MatrixXd::Identity(2, 2);
  out_of_range(0, 1) = out_of_range(1, 0) = 1.5;
  CHECK_THROWS_AS(SimilarityMatrix{out_of_range}, Error);
}

TEST_CASE("eccentricity fixtures") {
  // Fully consistent answers embed identically on the constant eigenvector.
  CHECK(eccentricity_uncertainty(SimilarityMatrix(Eigen::MatrixXd::Ones(4, 4)), 1)
            .value == doctest::Approx(0.0).epsilon(1e-9));

  // Two disconnected answers: the zero Laplacian embeds them at (1,0) and
  // (0,1); centering leaves a norm of sqrt(1/2).
  const auto lone_pair =
      eccentricity_uncertainty(SimilarityMatrix(Eigen::MatrixXd::Identity(2, 2)), 1);
  CHECK(lone_pair.value > 0.0);
  CHECK(lone_pair.value == doctest::Approx(std::sqrt(0.5)).epsilon(1e-9));

  const auto again =
      eccentricity_uncertainty(SimilarityMatrix(Eigen::MatrixXd::Identity(2, 2)), 1);
  CHECK(again.value == lone_pair.value);

  CHECK_THROWS_AS(
      eccentricity_uncertainty(SimilarityMatrix(Eigen::MatrixXd::Identity(2, 2)), 3),
      Error);
}

TEST_CASE("similarity_matrix builds from texts") {
  const auto sample = sample_with_scores({0.5, 0.5, 0.5}, {"a b", "a b", "c"});
  const auto sim = oracles::make_rouge_similarity();
  const auto matrix = similarity_matrix(sample, sim);
  CHECK(matrix.entries()(0, 1) == 1.0);
  CHECK(matrix.entries()(0, 2) == 0.0);
  CHECK(matrix.entries()(2, 2) == 1.0);
}

TEST_CASE("selected_indices honours the flag") {
  const auto sample = sample_with_scores({0.9, 0.5, 0.4});
  CHECK(selected_indices(sample, true) == std::vector<std::size_t>{0, 1, 2});
  CHECK(selected_indices(sample, false) == std::vector<std::size_t>{1, 2});
}

}  // TEST_SUITE
