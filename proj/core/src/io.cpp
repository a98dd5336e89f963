#include "uescore/io.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "uescore/errors.hpp"

namespace uescore {

double min_log_prob() {
  static const double value = std::log(1e-300);
  return value;
}

void TokenTrace::validate() const {
  if (tokens.empty()) throw Error("trace: tokens must be non-empty");
  if (tokens.size() != logprobs.size()) {
    throw Error("trace: tokens (" + std::to_string(tokens.size()) +
                ") and logprobs (" + std::to_string(logprobs.size()) +
                ") differ in length");
  }
  for (std::size_t i = 0; i < logprobs.size(); ++i) {
    const double lp = logprobs[i];
    if (!std::isfinite(lp) || lp > 0.0) {
      throw Error("trace: logprob[" + std::to_string(i) +
                  "] must be finite and <= 0, got " + std::to_string(lp));
    }
    if (lp < min_log_prob()) {
      throw Error("trace: logprob[" + std::to_string(i) +
                  "] below the ln(1e-300) floor");
    }
  }
}

void GenerationRecord::validate() const {
  trace.validate();
  if (!trace.tokens.empty() && text.empty()) {
    throw Error("generation: text must be non-empty when the trace is non-empty");
  }
  if (label && *label != 0 && *label != 1) {
    throw Error("generation: label must be 0 or 1");
  }
}

void QuestionSample::validate() const {
  if (generations.empty()) throw Error("sample '" + id + "': generations must be non-empty");
  std::size_t most_likely_count = 0;
  for (const auto& gen : generations) {
    gen.validate();
    if (gen.is_most_likely) ++most_likely_count;
  }
  if (most_likely_count > 1) {
    throw Error("sample '" + id + "': more than one generation flagged most likely");
  }
}

std::size_t QuestionSample::most_likely_index() const {
  for (std::size_t i = 0; i < generations.size(); ++i) {
    if (generations[i].is_most_likely) return i;
  }
  throw Error("sample '" + id + "': no generation flagged most likely");
}

const GenerationRecord& QuestionSample::most_likely() const {
  return generations[most_likely_index()];
}

void CalibrationExample::validate() const {
  answer_trace.validate();
  if (label != 0 && label != 1) throw Error("calibration example: label must be 0 or 1");
}

namespace {

using nlohmann::json;

TokenTrace trace_from_json(const json& j) {
  TokenTrace trace;
  trace.tokens = j.at("tokens").get<std::vector<std::string>>();
  trace.logprobs = j.at("logprobs").get<std::vector<double>>();
  for (double& lp : trace.logprobs) {
    if (std::isfinite(lp) && lp < min_log_prob()) lp = min_log_prob();
  }
  return trace;
}

json trace_to_json(const TokenTrace& trace) {
  return json{{"tokens", trace.tokens}, {"logprobs", trace.logprobs}};
}

QuestionSample sample_from_json(const json& j) {
  QuestionSample sample;
  sample.id = j.at("id").get<std::string>();
  sample.question = j.at("question").get<std::string>();
  sample.model_id = j.at("model_id").get<std::string>();
  for (const auto& gj : j.at("generations")) {
    GenerationRecord gen;
    gen.trace = trace_from_json(gj);
    gen.text = gj.at("text").get<std::string>();
    gen.is_most_likely = gj.value("is_most_likely", false);
    if (gj.contains("label") && !gj.at("label").is_null()) {
      gen.label = gj.at("label").get<int>();
    }
    sample.generations.push_back(std::move(gen));
  }
  sample.validate();
  return sample;
}

json sample_to_json(const QuestionSample& sample) {
  json generations = json::array();
  for (const auto& gen : sample.generations) {
    json gj = trace_to_json(gen.trace);
    gj["text"] = gen.text;
    gj["is_most_likely"] = gen.is_most_likely;
    if (gen.label) gj["label"] = *gen.label;
    generations.push_back(std::move(gj));
  }
  return json{{"id", sample.id},
              {"question", sample.question},
              {"model_id", sample.model_id},
              {"generations", std::move(generations)}};
}

}  // namespace

LoadResult load_samples(const std::filesystem::path& path, bool strict) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());

  LoadResult result;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.empty()) continue;
    try {
      result.samples.push_back(sample_from_json(json::parse(line)));
    } catch (const std::exception& e) {
      if (strict) {
        throw Error(path.string() + ":" + std::to_string(line_number) + ": " + e.what());
      }
      ++result.skipped_lines;
    }
  }
  if (in.bad()) throw Error("I/O failure reading " + path.string());
  return result;
}

void save_samples(const std::filesystem::path& path,
                  const std::vector<QuestionSample>& samples) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  for (const auto& sample : samples) {
    out << sample_to_json(sample).dump() << '\n';
  }
  if (!out) throw Error("I/O failure writing " + path.string());
}

std::vector<CalibrationExample> load_calibration(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());

  std::vector<CalibrationExample> examples;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      CalibrationExample example;
      example.question = j.at("question").get<std::string>();
      example.answer_trace = trace_from_json(j);
      example.label = j.at("label").get<int>();
      example.validate();
      examples.push_back(std::move(example));
    } catch (const std::exception& e) {
      throw Error(path.string() + ":" + std::to_string(line_number) + ": " + e.what());
    }
  }
  if (in.bad()) throw Error("I/O failure reading " + path.string());
  return examples;
}

void save_calibration(const std::filesystem::path& path,
                      const std::vector<CalibrationExample>& examples) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  for (const auto& example : examples) {
    json j = trace_to_json(example.answer_trace);
    j["question"] = example.question;
    j["label"] = example.label;
    out << j.dump() << '\n';
  }
  if (!out) throw Error("I/O failure writing " + path.string());
}

}  // namespace uescore
