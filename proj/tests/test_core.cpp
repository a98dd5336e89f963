#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "helpers.hpp"
#include "uescore/calibration.hpp"
#include "uescore/errors.hpp"
#include "uescore/io.hpp"

using namespace uescore;

namespace {

std::filesystem::path temp_file(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "uescore_core_tests";
  std::filesystem::create_directories(dir);
  return dir / name;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

}  // namespace

TEST_SUITE("core") {

TEST_CASE("load_samples parses a minimal line") {
  const auto path = temp_file("minimal.jsonl");
  write_text(path,
             R"({"id":"q1","question":"2+2?","model_id":"m","generations":[{"tokens":["4"],"logprobs":[0.0],"text":"4","is_most_likely":true,"label":1}]})"
             "\n");
  const auto result = load_samples(path, true);
  REQUIRE(result.samples.size() == 1);
  const auto& sample = result.samples[0];
  CHECK(sample.id == "q1");
  REQUIRE(sample.generations.size() == 1);
  CHECK(sample.generations[0].trace.logprobs[0] == 0.0);
  CHECK(sample.generations[0].label == 1);
  CHECK(sample.most_likely_index() == 0);
}

TEST_CASE("strict mode reports the offending line") {
  const auto path = temp_file("bad_lengths.jsonl");
  write_text(path,
             R"({"id":"q1","question":"?","model_id":"m","generations":[{"tokens":["a","b"],"logprobs":[-0.5],"text":"a b","is_most_likely":true}]})"
             "\n");
  CHECK_THROWS_WITH_AS(load_samples(path, true),
                       doctest::Contains(":1:"), Error);
}

TEST_CASE("lenient mode skips and counts bad lines") {
  const auto path = temp_file("mixed.jsonl");
  const std::string good =
      R"({"id":"%","question":"?","model_id":"m","generations":[{"tokens":["a"],"logprobs":[-0.1],"text":"a","is_most_likely":true}]})";
  std::string body;
  body += good;
  body[good.find('%') ] = '1';
  std::string g1 = good; g1.replace(g1.find('%'), 1, "g1");
  std::string g2 = good; g2.replace(g2.find('%'), 1, "g2");
  write_text(path, g1 + "\nnot json at all\n" + g2 + "\n");
  const auto result = load_samples(path, false);
  CHECK(result.samples.size() == 2);
  CHECK(result.skipped_lines == 1);
}

TEST_CASE("load floors tiny logprobs and rejects positive ones") {
  const auto path = temp_file("floor.jsonl");
  write_text(path,
             R"({"id":"q","question":"?","model_id":"m","generations":[{"tokens":["a"],"logprobs":[-900.0],"text":"a","is_most_likely":true}]})"
             "\n");
  const auto result = load_samples(path, true);
  CHECK(result.samples[0].generations[0].trace.logprobs[0] == min_log_prob());

  write_text(path,
             R"({"id":"q","question":"?","model_id":"m","generations":[{"tokens":["a"],"logprobs":[0.5],"text":"a","is_most_likely":true}]})"
             "\n");
  CHECK_THROWS_AS(load_samples(path, true), Error);
}

TEST_CASE("two most-likely generations violate the invariant") {
  const auto path = temp_file("two_top.jsonl");
  write_text(path,
             R"({"id":"q","question":"?","model_id":"m","generations":[{"tokens":["a"],"logprobs":[-0.1],"text":"a","is_most_likely":true},{"tokens":["b"],"logprobs":[-0.1],"text":"b","is_most_likely":true}]})"
             "\n");
  CHECK_THROWS_AS(load_samples(path, true), Error);
}

TEST_CASE("save/load round trip is structurally equal") {
  Rng rng(23);
  std::vector<QuestionSample> samples;
  for (int i = 0; i < 25; ++i) {
    auto sample = testutil::random_sample(rng);
    if (i % 3 == 0) sample.generations[0].label.reset();
    if (i % 5 == 0) {
      for (auto& gen : sample.generations) gen.is_most_likely = false;
    }
    samples.push_back(std::move(sample));
  }
  const auto path = temp_file("roundtrip.jsonl");
  save_samples(path, samples);
  const auto reloaded = load_samples(path, true);
  CHECK(reloaded.samples == samples);

  // Serializing the reloaded samples again is byte-identical.
  const auto path2 = temp_file("roundtrip2.jsonl");
  save_samples(path2, reloaded.samples);
  std::ifstream a(path, std::ios::binary), b(path2, std::ios::binary);
  const std::string bytes_a((std::istreambuf_iterator<char>(a)), {});
  const std::string bytes_b((std::istreambuf_iterator<char>(b)), {});
  CHECK(bytes_a == bytes_b);
}

TEST_CASE("build_calibration_set flattens labeled generations") {
  Rng rng(31);
  QuestionSample sample = testutil::random_sample(rng, 6, 6);
  for (std::size_t g = 0; g < sample.generations.size(); ++g) {
    sample.generations[g].text = "answer " + std::to_string(g);
    sample.generations[g].label = 1;
  }
  const auto examples = build_calibration_set({sample}, true);
  CHECK(examples.size() == 6);
  CHECK(examples[0].question == sample.question);
}

TEST_CASE("dedup keeps the first (question, answer) occurrence") {
  Rng rng(37);
  QuestionSample sample = testutil::random_sample(rng, 2, 2);
  sample.generations[0].text = "same  text";
  sample.generations[1].text = "same  text";
  sample.generations[0].label = 1;
  sample.generations[1].label = 0;
  CHECK(build_calibration_set({sample}, true).size() == 1);
  CHECK(build_calibration_set({sample}, true)[0].label == 1);
  CHECK(build_calibration_set({sample}, false).size() == 2);

  // Trimming applies before comparison.
  sample.generations[1].text = "  same  text  ";
  CHECK(build_calibration_set({sample}, true).size() == 1);
}

TEST_CASE("missing label rejected by calibration construction") {
  Rng rng(41);
  QuestionSample sample = testutil::random_sample(rng, 2, 2);
  sample.generations[1].label.reset();
  CHECK_THROWS_AS(build_calibration_set({sample}, true), Error);
}

TEST_CASE("calibration size bounded by generation count") {
  Rng rng(43);
  std::vector<QuestionSample> samples;
  std::size_t total = 0;
  for (int i = 0; i < 10; ++i) {
    auto sample = testutil::random_sample(rng, 1, 5);
    for (auto& gen : sample.generations) gen.label = 0;
    total += sample.generations.size();
    samples.push_back(std::move(sample));
  }
  CHECK(build_calibration_set(samples, true).size() <= total);
  CHECK(build_calibration_set(samples, false).size() == total);
}

TEST_CASE("split_calibration arithmetic and determinism") {
  std::vector<CalibrationExample> examples;
  for (int i = 0; i < 10; ++i) {
    examples.push_back(CalibrationExample{
        "q" + std::to_string(i), TokenTrace{{"a"}, {-0.1}}, i % 2});
  }
  const auto split = split_calibration(examples, 0.2, 7);
  CHECK(split.train.size() == 8);
  CHECK(split.holdout.size() == 2);

  const auto again = split_calibration(examples, 0.2, 7);
  CHECK(again.train == split.train);
  CHECK(again.holdout == split.holdout);

  const auto all_train = split_calibration(examples, 0.0, 7);
  CHECK(all_train.train.size() == 10);
  CHECK(all_train.holdout.empty());

  CHECK_THROWS_AS(split_calibration(examples, 1.0, 7), Error);
}

TEST_CASE("calibration file round trip") {
  Rng rng(47);
  std::vector<CalibrationExample> examples;
  for (int i = 0; i < 12; ++i) {
    examples.push_back(CalibrationExample{"q" + std::to_string(i),
                                          testutil::random_trace(rng),
                                          static_cast<int>(rng.bounded(2))});
  }
  const auto path = temp_file("calib.jsonl");
  save_calibration(path, examples);
  CHECK(load_calibration(path) == examples);
}

}  // TEST_SUITE
