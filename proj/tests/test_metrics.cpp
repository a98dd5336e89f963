#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "helpers.hpp"
#include "uescore/errors.hpp"
#include "uescore/metrics.hpp"

using namespace uescore;
using namespace uescore::metrics;

TEST_SUITE("metrics") {

TEST_CASE("auroc fixtures") {
  // All incorrect ranked above all correct.
  CHECK(auroc({0.9, 0.8, 0.1, 0.2}, {0, 0, 1, 1}) == 1.0);
  // All tied.
  CHECK(auroc({0.5, 0.5, 0.5, 0.5}, {0, 1, 0, 1}) == 0.5);

  // Brute-force-verified values for the three-item instances.
  const std::vector<double> u = {0.9, 0.1, 0.5};
  CHECK(auroc(u, {0, 1, 1}) == testutil::brute_force_auroc(u, {0, 1, 1}));
  CHECK(auroc(u, {0, 1, 1}) == 1.0);
  CHECK(auroc(u, {0, 1, 0}) == testutil::brute_force_auroc(u, {0, 1, 0}));
  CHECK(auroc(u, {0, 1, 0}) == 1.0);
  CHECK(auroc(u, {1, 1, 0}) == testutil::brute_force_auroc(u, {1, 1, 0}));
  CHECK(auroc(u, {1, 1, 0}) == 0.5);

  CHECK_THROWS_AS(auroc({0.1, 0.2}, {1, 1}), Error);
  CHECK_THROWS_AS(auroc({0.1, 0.2}, {0, 0}), Error);
  CHECK_THROWS_AS(auroc({0.1}, {0, 1}), Error);
}

TEST_CASE("auroc equals brute force exactly on random instances with ties") {
  Rng rng(311);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 2 + rng.bounded(199);
    std::vector<double> uncertainties(n);
    std::vector<int> labels(n);
    bool has0 = false, has1 = false;
    for (std::size_t i = 0; i < n; ++i) {
      // Coarse grid injects plenty of ties.
      uncertainties[i] = static_cast<double>(rng.bounded(8)) / 7.0;
      labels[i] = static_cast<int>(rng.bounded(2));
      (labels[i] ? has1 : has0) = true;
    }
    if (!has0) labels[0] = 0;
    if (!has1) labels[n - 1] = 1;
    CHECK(auroc(uncertainties, labels) ==
          testutil::brute_force_auroc(uncertainties, labels));
  }
}

TEST_CASE("auroc invariant under monotone transforms") {
  Rng rng(313);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 5 + rng.bounded(50);
    std::vector<double> uncertainties(n);
    std::vector<int> labels(n);
    for (std::size_t i = 0; i < n; ++i) {
      uncertainties[i] = rng.uniform(-3, 3);
      labels[i] = static_cast<int>(rng.bounded(2));
    }
    labels[0] = 0;
    labels[1] = 1;
    std::vector<double> transformed(n);
    for (std::size_t i = 0; i < n; ++i) {
      transformed[i] = std::exp(2.0 * uncertainties[i]) + 5.0;
    }
    CHECK(auroc(uncertainties, labels) == auroc(transformed, labels));
  }
}

TEST_CASE("prr fixtures") {
  // Uncertainty equals the error indicator: curve matches the oracle.
  CHECK(prr({1, 0, 1, 0}, {0, 1, 0, 1}) == doctest::Approx(1.0).epsilon(1e-12));

  // Hand-checked rejection curve: discarding the two most-uncertain items
  // removes both errors immediately.
  CHECK(prr({0.1, 0.2, 0.9, 0.8}, {1, 1, 0, 0}) == doctest::Approx(1.0).epsilon(1e-12));

  // Anti-correlated uncertainty rejects the correct answers first.
  CHECK(prr({0.9, 0.8, 0.1, 0.2}, {1, 1, 0, 0}) < 0.0);

  CHECK_THROWS_AS(prr({0.5, 0.6}, {1, 1}), Error);
  CHECK_THROWS_AS(prr({0.5, 0.6}, {0, 0}), Error);
}

TEST_CASE("prr of a random permutation concentrates near zero") {
  Rng rng(317);
  const std::size_t n = 1000;
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = rng.bounded(10) < 7 ? 1 : 0;

  double total = 0.0;
  const int trials = 50;
  for (int trial = 0; trial < trials; ++trial) {
    std::vector<double> uncertainties(n);
    for (std::size_t i = 0; i < n; ++i) uncertainties[i] = static_cast<double>(i);
    rng.shuffle(uncertainties);
    total += prr(uncertainties, labels);
  }
  CHECK(std::abs(total / trials) < 0.1);
}

TEST_CASE("prr invariant under monotone transforms") {
  Rng rng(331);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 10 + rng.bounded(100);
    std::vector<double> uncertainties(n);
    std::vector<int> labels(n);
    for (std::size_t i = 0; i < n; ++i) {
      uncertainties[i] = rng.uniform(0, 1);
      labels[i] = static_cast<int>(rng.bounded(2));
    }
    labels[0] = 0;
    labels[1] = 1;
    std::vector<double> transformed(n);
    for (std::size_t i = 0; i < n; ++i) {
      transformed[i] = std::atan(3.0 * uncertainties[i]) - 2.0;
    }
    CHECK(prr(uncertainties, labels) ==
          doctest::Approx(prr(transformed, labels)).epsilon(1e-12));
  }
}

TEST_CASE("evaluate pulls labels from the most-likely generation") {
  Rng rng(337);
  std::vector<QuestionSample> samples;
  std::vector<ue::UEScore> results;
  for (int i = 0; i < 2; ++i) {
    auto sample = testutil::random_sample(rng, 1, 3);
    sample.generations[0].label = i;  // sample 0 incorrect, sample 1 correct
    samples.push_back(sample);
  }
  results.push_back(ue::UEScore{0.9, ue::Method::kEntropy});
  results.push_back(ue::UEScore{0.1, ue::Method::kEntropy});

  const auto report = evaluate(samples, results, "entropy(lns)");
  CHECK(report.method == "entropy(lns)");
  CHECK(report.n == 2);
  CHECK(report.positives == 1);
  REQUIRE(report.auroc.has_value());
  CHECK(*report.auroc == 1.0);
  REQUIRE(report.prr.has_value());
  CHECK(*report.prr == doctest::Approx(1.0));
}

TEST_CASE("evaluate carries the computable subset on single-class labels") {
  Rng rng(347);
  std::vector<QuestionSample> samples;
  std::vector<ue::UEScore> results;
  for (int i = 0; i < 3; ++i) {
    auto sample = testutil::random_sample(rng, 1, 2);
    sample.generations[0].label = 1;
    samples.push_back(sample);
    results.push_back(ue::UEScore{0.1 * i, ue::Method::kConfidence});
  }
  const auto report = evaluate(samples, results, "confidence(lns)");
  CHECK(!report.auroc.has_value());
  CHECK(!report.prr.has_value());
  CHECK(report.n == 3);
  CHECK(report.positives == 3);
}

TEST_CASE("evaluate is order invariant without ties") {
  Rng rng(353);
  std::vector<QuestionSample> samples;
  std::vector<ue::UEScore> results;
  for (int i = 0; i < 40; ++i) {
    auto sample = testutil::random_sample(rng, 1, 2);
    sample.generations[0].label = static_cast<int>(rng.bounded(2));
    samples.push_back(sample);
    results.push_back(ue::UEScore{rng.uniform(0, 1), ue::Method::kEntropy});
  }
  samples[0].generations[0].label = 0;
  samples[1].generations[0].label = 1;

  const auto base = evaluate(samples, results, "m");

  std::vector<std::size_t> perm(samples.size());
  for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
  rng.shuffle(perm);
  std::vector<QuestionSample> shuffled_samples;
  std::vector<ue::UEScore> shuffled_results;
  for (std::size_t i : perm) {
    shuffled_samples.push_back(samples[i]);
    shuffled_results.push_back(results[i]);
  }
  const auto shuffled = evaluate(shuffled_samples, shuffled_results, "m");
  CHECK(*base.auroc == *shuffled.auroc);
  CHECK(*base.prr == doctest::Approx(*shuffled.prr).epsilon(1e-12));
}

TEST_CASE("evaluate requires a label on the most-likely generation") {
  Rng rng(359);
  auto sample = testutil::random_sample(rng, 1, 2);
  sample.generations[0].label.reset();
  CHECK_THROWS_AS(
      evaluate({sample}, {ue::UEScore{0.5, ue::Method::kConfidence}}, "m"), Error);
}

}  // TEST_SUITE
