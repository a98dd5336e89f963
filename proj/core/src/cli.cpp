#include "uescore/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <memory>
#include <set>
#include <sstream>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "uescore/calibration.hpp"
#include "uescore/errors.hpp"
#include "uescore/io.hpp"
#include "uescore/metrics.hpp"
#include "uescore/oracles.hpp"
#include "uescore/rng.hpp"
#include "uescore/scoring.hpp"
#include "uescore/toml.hpp"
#include "uescore/ue.hpp"

namespace uescore::cli {
namespace {

const std::set<std::string> kScorerNames = {"lns", "seq_prob", "weighted", "lars"};
const std::set<std::string> kAggregatorNames = {"confidence", "entropy", "se", "sentsar"};
const std::set<std::string> kBaselineNames = {"lexical_similarity", "num_semantic_groups",
                                              "degree_matrix", "eccentricity"};

std::string format_double(double v) {
  char buffer[40];
  std::snprintf(buffer, sizeof(buffer), "%.17g", v);
  return buffer;
}

void check_names(const std::vector<std::string>& names,
                 const std::set<std::string>& known, const std::string& what) {
  for (const auto& name : names) {
    if (!known.count(name)) {
      std::string allowed;
      for (const auto& k : known) {
        if (!allowed.empty()) allowed += ", ";
        allowed += k;
      }
      throw UsageError("unknown " + what + " '" + name + "' (expected one of: " +
                       allowed + ")");
    }
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Config file handling

namespace {

using Applier = std::function<void(RunConfig&, const TomlValue&)>;

std::map<std::string, std::map<std::string, Applier>> config_schema() {
  auto string_field = [](std::string RunConfig::* member) {
    return [member](RunConfig& c, const TomlValue& v) {
      if (v.kind != TomlValue::Kind::kString) throw UsageError("expected a string");
      c.*member = v.str;
    };
  };
  auto bool_field = [](bool RunConfig::* member) {
    return [member](RunConfig& c, const TomlValue& v) {
      if (v.kind != TomlValue::Kind::kBoolean) throw UsageError("expected a boolean");
      c.*member = v.boolean;
    };
  };
  auto double_field = [](double RunConfig::* member) {
    return [member](RunConfig& c, const TomlValue& v) { c.*member = v.as_number(); };
  };
  auto int_field = [](int RunConfig::* member) {
    return [member](RunConfig& c, const TomlValue& v) {
      if (v.kind != TomlValue::Kind::kInteger) throw UsageError("expected an integer");
      c.*member = static_cast<int>(v.integer);
    };
  };
  auto list_field = [](std::vector<std::string> RunConfig::* member) {
    return [member](RunConfig& c, const TomlValue& v) {
      if (v.kind != TomlValue::Kind::kStringArray) {
        throw UsageError("expected an array of strings");
      }
      c.*member = v.array;
    };
  };
  auto lars_int = [](int lars::LarsConfig::* member) {
    return [member](RunConfig& c, const TomlValue& v) {
      if (v.kind != TomlValue::Kind::kInteger) throw UsageError("expected an integer");
      c.lars.*member = static_cast<int>(v.integer);
    };
  };
  auto lars_bool = [](bool lars::LarsConfig::* member) {
    return [member](RunConfig& c, const TomlValue& v) {
      if (v.kind != TomlValue::Kind::kBoolean) throw UsageError("expected a boolean");
      c.lars.*member = v.boolean;
    };
  };

  std::map<std::string, std::map<std::string, Applier>> schema;
  schema["data"] = {
      {"input", string_field(&RunConfig::input)},
      {"calibration", string_field(&RunConfig::calibration)},
      {"output", string_field(&RunConfig::output)},
      {"output_dir", string_field(&RunConfig::output_dir)},
      {"weights", string_field(&RunConfig::weights)},
      {"strict", bool_field(&RunConfig::strict)},
      {"dedup", bool_field(&RunConfig::dedup)},
  };
  schema["scorers"] = {
      {"names", list_field(&RunConfig::scorers)},
      {"model", string_field(&RunConfig::model_path)},
  };
  schema["aggregators"] = {
      {"names", list_field(&RunConfig::aggregators)},
      {"baselines", list_field(&RunConfig::baselines)},
      {"include_most_likely", bool_field(&RunConfig::include_most_likely)},
  };
  schema["oracles"] = {
      {"equivalence", string_field(&RunConfig::equivalence)},
      {"rouge_threshold", double_field(&RunConfig::rouge_threshold)},
      {"entailment_url", string_field(&RunConfig::entailment_url)},
      {"entailment_timeout_s", double_field(&RunConfig::entailment_timeout_s)},
      {"sentsar_temperature", double_field(&RunConfig::sentsar_temperature)},
      {"num_eigvecs", int_field(&RunConfig::num_eigvecs)},
  };
  schema["lars"] = {
      {"d", lars_int(&lars::LarsConfig::d)},
      {"layers", lars_int(&lars::LarsConfig::layers)},
      {"heads", lars_int(&lars::LarsConfig::heads)},
      {"k", lars_int(&lars::LarsConfig::k)},
      {"vocab_size", lars_int(&lars::LarsConfig::vocab_size)},
      {"max_len", lars_int(&lars::LarsConfig::max_len)},
      {"association",
       [](RunConfig& c, const TomlValue& v) {
         if (v.kind != TomlValue::Kind::kString ||
             (v.str != "sequential" && v.str != "additive")) {
           throw UsageError("association must be \"sequential\" or \"additive\"");
         }
         c.lars.association = v.str == "additive" ? lars::Association::kAdditive
                                                  : lars::Association::kSequential;
       }},
      {"prob_embeddings_trainable", lars_bool(&lars::LarsConfig::prob_embeddings_trainable)},
      {"include_question", lars_bool(&lars::LarsConfig::include_question)},
      {"text_only", lars_bool(&lars::LarsConfig::text_only)},
      {"prob_only", lars_bool(&lars::LarsConfig::prob_only)},
  };
  schema["training"] = {
      {"learning_rate", double_field(&RunConfig::learning_rate)},
      {"weight_decay", double_field(&RunConfig::weight_decay)},
      {"epochs", int_field(&RunConfig::epochs)},
      {"batch_size", int_field(&RunConfig::batch_size)},
      {"holdout_fraction", double_field(&RunConfig::holdout_fraction)},
  };
  schema["report"] = {
      {"format", string_field(&RunConfig::format)},
  };
  schema["run"] = {
      {"seed",
       [](RunConfig& c, const TomlValue& v) {
         if (v.kind != TomlValue::Kind::kInteger) throw UsageError("expected an integer");
         c.seed = static_cast<std::uint64_t>(v.integer);
       }},
  };
  return schema;
}

}  // namespace

void apply_config_file(RunConfig& config, const std::filesystem::path& path) {
  const auto document = parse_toml_file(path);
  const auto schema = config_schema();
  for (const auto& [section, keys] : document) {
    const auto section_it = schema.find(section);
    if (section_it == schema.end()) {
      throw UsageError(path.string() + ": unknown section [" + section + "]");
    }
    for (const auto& [key, value] : keys) {
      const auto key_it = section_it->second.find(key);
      if (key_it == section_it->second.end()) {
        throw UsageError(path.string() + ": unknown key '" + key + "' in [" +
                         section + "]");
      }
      try {
        key_it->second(config, value);
      } catch (const UsageError& e) {
        throw UsageError(path.string() + ": [" + section + "] " + key + ": " + e.what());
      }
    }
  }
}

std::string render_config(const RunConfig& c) {
  std::ostringstream out;
  auto list = [](const std::vector<std::string>& values) {
    std::string joined = "[";
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (i) joined += ", ";
      joined += toml_escape(values[i]);
    }
    return joined + "]";
  };
  out << "[run]\n";
  out << "seed = " << c.seed << "\n\n";
  out << "[data]\n";
  out << "input = " << toml_escape(c.input) << '\n';
  out << "calibration = " << toml_escape(c.calibration) << '\n';
  out << "output = " << toml_escape(c.output) << '\n';
  out << "output_dir = " << toml_escape(c.output_dir) << '\n';
  out << "weights = " << toml_escape(c.weights) << '\n';
  out << "strict = " << (c.strict ? "true" : "false") << '\n';
  out << "dedup = " << (c.dedup ? "true" : "false") << "\n\n";
  out << "[scorers]\n";
  out << "names = " << list(c.scorers) << '\n';
  out << "model = " << toml_escape(c.model_path) << "\n\n";
  out << "[aggregators]\n";
  out << "names = " << list(c.aggregators) << '\n';
  out << "baselines = " << list(c.baselines) << '\n';
  out << "include_most_likely = " << (c.include_most_likely ? "true" : "false")
      << "\n\n";
  out << "[oracles]\n";
  out << "equivalence = " << toml_escape(c.equivalence) << '\n';
  out << "rouge_threshold = " << format_double(c.rouge_threshold) << '\n';
  out << "entailment_url = " << toml_escape(c.entailment_url) << '\n';
  out << "entailment_timeout_s = " << format_double(c.entailment_timeout_s) << '\n';
  out << "sentsar_temperature = " << format_double(c.sentsar_temperature) << '\n';
  out << "num_eigvecs = " << c.num_eigvecs << "\n\n";
  out << "[lars]\n";
  out << "d = " << c.lars.d << '\n';
  out << "layers = " << c.lars.layers << '\n';
  out << "heads = " << c.lars.heads << '\n';
  out << "k = " << c.lars.k << '\n';
  out << "vocab_size = " << c.lars.vocab_size << '\n';
  out << "max_len = " << c.lars.max_len << '\n';
  out << "association = "
      << (c.lars.association == lars::Association::kAdditive ? "\"additive\""
                                                             : "\"sequential\"")
      << '\n';
  out << "prob_embeddings_trainable = "
      << (c.lars.prob_embeddings_trainable ? "true" : "false") << '\n';
  out << "include_question = " << (c.lars.include_question ? "true" : "false") << '\n';
  out << "text_only = " << (c.lars.text_only ? "true" : "false") << '\n';
  out << "prob_only = " << (c.lars.prob_only ? "true" : "false") << "\n\n";
  out << "[training]\n";
  out << "learning_rate = " << format_double(c.learning_rate) << '\n';
  out << "weight_decay = " << format_double(c.weight_decay) << '\n';
  out << "epochs = " << c.epochs << '\n';
  out << "batch_size = " << c.batch_size << '\n';
  out << "holdout_fraction = " << format_double(c.holdout_fraction) << "\n\n";
  out << "[report]\n";
  out << "format = " << toml_escape(c.format) << '\n';
  return out.str();
}

std::string config_fingerprint(const RunConfig& config) {
  const std::string rendered = render_config(config);
  const std::uint64_t hash = fnv1a64(rendered.data(), rendered.size());
  char buffer[17];
  std::snprintf(buffer, sizeof(buffer), "%016llx",
                static_cast<unsigned long long>(hash));
  return buffer;
}

// ---------------------------------------------------------------------------
// build-calib

void cmd_build_calib(const RunConfig& config, std::ostream& log) {
  if (config.input.empty()) throw UsageError("build-calib: --in is required");
  if (config.output.empty()) throw UsageError("build-calib: --out is required");

  const auto loaded = load_samples(config.input, config.strict);
  std::size_t total_generations = 0;
  for (const auto& sample : loaded.samples) total_generations += sample.generations.size();

  const auto examples = build_calibration_set(loaded.samples, config.dedup);
  save_calibration(config.output, examples);

  log << "samples: " << loaded.samples.size();
  if (loaded.skipped_lines > 0) log << " (skipped " << loaded.skipped_lines << " lines)";
  log << "\ngenerations: " << total_generations << "\nexamples written: "
      << examples.size();
  if (config.dedup) {
    log << " (" << total_generations - examples.size() << " duplicates dropped)";
  }
  log << "\nconfig " << config_fingerprint(config) << '\n';
}

// ---------------------------------------------------------------------------
// train

void cmd_train(const RunConfig& config, std::ostream& log) {
  if (config.calibration.empty()) throw UsageError("train: --calib is required");
  if (config.output_dir.empty()) throw UsageError("train: --out-dir is required");
  if (config.epochs < 0) throw UsageError("train: epochs must be >= 0");

  RunConfig resolved = config;
  resolved.lars.seed = config.seed;
  resolved.lars.validate();

  const auto examples = load_calibration(resolved.calibration);
  auto split = split_calibration(examples, resolved.holdout_fraction, resolved.seed);
  log << "calibration examples: " << examples.size() << " (train " << split.train.size()
      << ", holdout " << split.holdout.size() << ")\n";

  const auto partition = lars::fit_partition(split.train, resolved.lars.k, resolved.lars.d);
  lars::LarsModel model = lars::init_model(resolved.lars, partition);

  lars::AdamWParams optimizer;
  optimizer.learning_rate = resolved.learning_rate;
  optimizer.weight_decay = resolved.weight_decay;
  const auto trajectory =
      lars::train(model, split.train, split.holdout, optimizer, resolved.epochs,
                  resolved.batch_size, resolved.seed + 1);

  std::filesystem::create_directories(resolved.output_dir);
  const auto dir = std::filesystem::path(resolved.output_dir);
  lars::save_model(model, dir / "model.bin");
  const std::string fingerprint = config_fingerprint(resolved);
  lars::write_metrics_csv(dir / "metrics.csv", trajectory, {"config " + fingerprint});
  {
    std::ofstream out(dir / "config.toml", std::ios::binary);
    if (!out) throw Error("cannot write resolved config");
    out << render_config(resolved);
  }

  for (const auto& row : trajectory) {
    log << "epoch " << row.epoch << ": train_loss " << format_double(row.train_loss)
        << " holdout_loss " << format_double(row.holdout_loss) << " holdout_auroc "
        << format_double(row.holdout_auroc) << '\n';
  }
  log << "model written to " << (dir / "model.bin").string() << "\nconfig "
      << fingerprint << '\n';
}

// ---------------------------------------------------------------------------
// Scorer construction shared by score/evaluate

namespace {

/// Per-sample scorer factory; external-weight scorers need the enclosing
/// sample to locate each generation's weight row.
using ScorerFactory = std::function<scoring::Scorer(const QuestionSample&)>;

std::map<std::string, std::vector<std::vector<double>>> load_weights_file(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open weights file " + path.string());
  std::map<std::string, std::vector<std::vector<double>>> weights;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      weights[j.at("id").get<std::string>()] =
          j.at("weights").get<std::vector<std::vector<double>>>();
    } catch (const std::exception& e) {
      throw Error(path.string() + ":" + std::to_string(line_number) + ": " + e.what());
    }
  }
  return weights;
}

ScorerFactory make_scorer_factory(const std::string& name, const RunConfig& config) {
  if (name == "lns") {
    return [](const QuestionSample&) { return scoring::make_length_normalized_scorer(); };
  }
  if (name == "seq_prob") {
    return [](const QuestionSample&) { return scoring::make_sequence_prob_scorer(); };
  }
  if (name == "weighted") {
    if (!config.weights.empty()) {
      auto table = std::make_shared<std::map<std::string, std::vector<std::vector<double>>>>(
          load_weights_file(config.weights));
      return [table](const QuestionSample& sample) -> scoring::Scorer {
        const auto it = table->find(sample.id);
        if (it == table->end()) {
          throw Error("weights file has no entry for sample '" + sample.id + "'");
        }
        if (it->second.size() != sample.generations.size()) {
          throw Error("weights file entry for sample '" + sample.id +
                      "' does not cover every generation");
        }
        auto lookup = std::make_shared<std::unordered_map<const GenerationRecord*,
                                                          scoring::WeightVector>>();
        for (std::size_t g = 0; g < sample.generations.size(); ++g) {
          (*lookup)[&sample.generations[g]] = scoring::WeightVector{it->second[g]};
        }
        return [lookup](const std::string&, const GenerationRecord& gen) {
          return scoring::weighted_score(gen.trace, lookup->at(&gen));
        };
      };
    }
    return [](const QuestionSample&) {
      return scoring::make_relevance_weighted_scorer(
          oracles::make_rouge_similarity(), scoring::WeightNormalize::kSumToOne);
    };
  }
  if (name == "lars") {
    if (config.model_path.empty()) {
      throw UsageError("scorer 'lars' requires --model pointing at a trained model");
    }
    auto model = std::make_shared<const lars::LarsModel>(lars::load_model(config.model_path));
    return [model](const QuestionSample&) { return lars::make_scorer(model); };
  }
  throw UsageError("unknown scorer '" + name + "'");
}

oracles::EquivalenceFn make_equivalence(const RunConfig& config) {
  if (config.equivalence == "exact") return oracles::make_exact_match_oracle();
  if (config.equivalence == "rouge_l") {
    return oracles::make_rouge_threshold_oracle(config.rouge_threshold);
  }
  if (config.equivalence == "http") {
    if (config.entailment_url.empty()) {
      throw UsageError("equivalence 'http' requires entailment_url");
    }
    return oracles::make_http_entailment_oracle(
        config.entailment_url,
        std::chrono::milliseconds(
            static_cast<long>(config.entailment_timeout_s * 1000.0)));
  }
  throw UsageError("unknown equivalence oracle '" + config.equivalence +
                   "' (expected exact, rouge_l, or http)");
}

/// Copy of the sample restricted to the selection the sampling-based
/// aggregators should see.
QuestionSample selected_view(const QuestionSample& sample, bool include_most_likely) {
  if (include_most_likely) return sample;
  QuestionSample view;
  view.id = sample.id;
  view.question = sample.question;
  view.model_id = sample.model_id;
  for (const auto& gen : sample.generations) {
    if (!gen.is_most_likely) view.generations.push_back(gen);
  }
  return view;
}

}  // namespace

// ---------------------------------------------------------------------------
// score

namespace {

void check_scorer_requirements(const RunConfig& config) {
  check_names(config.scorers, kScorerNames, "scorer");
  if (std::count(config.scorers.begin(), config.scorers.end(), "lars") > 0 &&
      config.model_path.empty()) {
    throw UsageError("scorer 'lars' requires --model pointing at a trained model");
  }
}

}  // namespace

void cmd_score(const RunConfig& config, std::ostream& log) {
  if (config.input.empty()) throw UsageError("score: --in is required");
  if (config.output.empty()) throw UsageError("score: --out is required");
  check_scorer_requirements(config);

  const auto loaded = load_samples(config.input, config.strict);
  std::vector<std::pair<std::string, ScorerFactory>> factories;
  for (const auto& name : config.scorers) {
    factories.emplace_back(name, make_scorer_factory(name, config));
  }

  std::ofstream out(config.output, std::ios::binary);
  if (!out) throw Error("cannot open " + config.output + " for writing");
  out << nlohmann::json{{"config_fingerprint", config_fingerprint(config)}}.dump()
      << '\n';
  for (const auto& sample : loaded.samples) {
    nlohmann::json scores = nlohmann::json::object();
    for (const auto& [name, factory] : factories) {
      const auto scorer = factory(sample);
      auto& column = scores[name] = nlohmann::json::array();
      for (const auto& gen : sample.generations) {
        column.push_back(scorer(sample.question, gen).value);
      }
    }
    out << nlohmann::json{{"id", sample.id}, {"scores", std::move(scores)}}.dump()
        << '\n';
  }
  if (!out) throw Error("I/O failure writing " + config.output);
  log << "scored " << loaded.samples.size() << " samples with "
      << factories.size() << " scorer(s)\nconfig " << config_fingerprint(config)
      << '\n';
}

// ---------------------------------------------------------------------------
// evaluate

void cmd_evaluate(const RunConfig& config, std::ostream& log) {
  if (config.input.empty()) throw UsageError("evaluate: --in is required");
  if (config.output.empty()) throw UsageError("evaluate: --out is required");
  check_scorer_requirements(config);
  check_names(config.aggregators, kAggregatorNames, "aggregator");
  check_names(config.baselines, kBaselineNames, "baseline");
  if (config.format != "csv" && config.format != "json" && config.format != "both") {
    throw UsageError("unknown report format '" + config.format + "'");
  }

  const auto loaded = load_samples(config.input, config.strict);
  const auto& samples = loaded.samples;
  if (samples.empty()) throw Error("evaluate: no samples loaded");

  const auto equivalent = make_equivalence(config);
  const auto similarity = oracles::make_rouge_similarity();

  const bool needs_clustering =
      std::count(config.aggregators.begin(), config.aggregators.end(), "se") > 0 ||
      std::count(config.baselines.begin(), config.baselines.end(),
                 "num_semantic_groups") > 0;
  const bool needs_similarity_matrix =
      std::count(config.baselines.begin(), config.baselines.end(), "degree_matrix") > 0 ||
      std::count(config.baselines.begin(), config.baselines.end(), "eccentricity") > 0;

  std::vector<QuestionSample> views;
  views.reserve(samples.size());
  for (const auto& sample : samples) {
    views.push_back(selected_view(sample, config.include_most_likely));
  }
  std::vector<ue::Clustering> clusterings;
  if (needs_clustering) {
    clusterings.reserve(views.size());
    for (const auto& view : views) {
      clusterings.push_back(ue::cluster_semantically(view, equivalent));
    }
  }
  std::vector<std::unique_ptr<ue::SimilarityMatrix>> matrices;
  if (needs_similarity_matrix) {
    matrices.reserve(views.size());
    for (const auto& view : views) {
      matrices.push_back(
          std::make_unique<ue::SimilarityMatrix>(ue::similarity_matrix(view, similarity)));
    }
  }

  std::map<std::string, ScorerFactory> factories;
  for (const auto& scorer_name : config.scorers) {
    factories.emplace(scorer_name, make_scorer_factory(scorer_name, config));
  }

  std::vector<metrics::EvalReport> reports;
  for (const auto& aggregator : config.aggregators) {
    for (const auto& scorer_name : config.scorers) {
      const auto& factory = factories.at(scorer_name);
      std::vector<ue::UEScore> results;
      results.reserve(samples.size());
      for (std::size_t i = 0; i < samples.size(); ++i) {
        const auto scorer = factory(samples[i]);
        if (aggregator == "confidence") {
          results.push_back(ue::confidence(samples[i], scorer));
        } else if (aggregator == "entropy") {
          results.push_back(ue::entropy(views[i], scorer, true));
        } else if (aggregator == "se") {
          results.push_back(ue::semantic_entropy(views[i], scorer, clusterings[i]));
        } else {
          results.push_back(ue::sentsar(views[i], scorer, similarity,
                                        config.sentsar_temperature));
        }
      }
      reports.push_back(metrics::evaluate(samples, results,
                                          aggregator + "(" + scorer_name + ")"));
    }
  }
  for (const auto& baseline : config.baselines) {
    std::vector<ue::UEScore> results;
    results.reserve(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
      if (baseline == "lexical_similarity") {
        results.push_back(ue::lexical_similarity(views[i]));
      } else if (baseline == "num_semantic_groups") {
        results.push_back(ue::num_semantic_groups(clusterings[i]));
      } else if (baseline == "degree_matrix") {
        results.push_back(ue::degree_uncertainty(*matrices[i]));
      } else {
        results.push_back(ue::eccentricity_uncertainty(
            *matrices[i],
            std::min<int>(config.num_eigvecs,
                          static_cast<int>(matrices[i]->size()))));
      }
    }
    reports.push_back(metrics::evaluate(samples, results, baseline));
  }

  const std::string fingerprint = config_fingerprint(config);
  const std::vector<std::string> comments = {"config " + fingerprint};
  const std::filesystem::path out_path(config.output);
  if (config.format == "csv" || config.format == "both") {
    metrics::write_reports_csv(out_path, reports, comments);
  }
  if (config.format == "json") {
    metrics::write_reports_json(out_path, reports, comments);
  } else if (config.format == "both") {
    auto json_path = out_path;
    json_path.replace_extension(".json");
    metrics::write_reports_json(json_path, reports, comments);
  }

  for (const auto& report : reports) {
    log << report.method << ": auroc "
        << (report.auroc ? format_double(*report.auroc) : "nan") << " prr "
        << (report.prr ? format_double(*report.prr) : "nan") << " (n=" << report.n
        << ")\n";
  }
  log << "report written to " << config.output << "\nconfig " << fingerprint << '\n';
}

// ---------------------------------------------------------------------------
// synth

void cmd_synth(const synth::SynthOptions& options,
               const std::filesystem::path& output, std::ostream& log) {
  if (output.empty()) throw UsageError("synth: --out is required");
  const auto samples = synth::generate(options);
  save_samples(output, samples);
  log << "wrote " << samples.size() << ' ' << synth::task_name(options.task)
      << " samples to " << output.string() << '\n';
}

// ---------------------------------------------------------------------------
// gradcheck

GradcheckReport run_gradcheck(const GradcheckOptions& options) {
  lars::LarsConfig config;
  config.d = 16;
  config.layers = 1;
  config.heads = 2;
  config.k = 4;
  config.vocab_size = 64;
  config.max_len = 64;
  config.association = lars::Association::kSequential;
  config.prob_embeddings_trainable = true;  // every tensor must be exercised
  config.include_question = true;
  config.seed = options.seed;

  synth::SynthOptions data_options;
  data_options.task = synth::Task::kMarkerProbability;
  data_options.count = 8;
  data_options.seed = options.seed + 17;
  const auto samples = synth::generate(data_options);
  const auto examples = build_calibration_set(samples, false);

  const auto partition = lars::fit_partition(examples, config.k, config.d);
  lars::LarsModel model = lars::init_model(config, partition);

  std::vector<lars::LabeledInput> batch;
  for (std::size_t i = 0; i < 4; ++i) {
    batch.push_back(lars::prepare_example(config, partition, examples[i]));
  }

  auto [loss, grads] = lars::loss_and_gradients(model, batch);
  (void)loss;
  const auto grad_refs = lars::parameter_tensors(grads, config);
  if (!options.corrupt_tensor.empty()) {
    bool found = false;
    for (const auto& ref : grad_refs) {
      if (ref.name == options.corrupt_tensor) {
        ref.data[0] += 1e-3;
        found = true;
        break;
      }
    }
    if (!found) {
      throw UsageError("gradcheck: no tensor named '" + options.corrupt_tensor + "'");
    }
  }

  const auto param_refs = lars::parameter_tensors(model.params, config);
  constexpr double kStep = 1e-4;

  GradcheckReport report;
  for (std::size_t t = 0; t < param_refs.size(); ++t) {
    const auto& param = param_refs[t];
    if (!param.trainable) continue;
    double max_abs_diff = 0.0;
    double max_abs_grad = 0.0;
    for (std::ptrdiff_t j = 0; j < param.size; ++j) {
      const double original = param.data[j];
      param.data[j] = original + kStep;
      const double loss_plus = lars::batch_loss(model, batch);
      param.data[j] = original - kStep;
      const double loss_minus = lars::batch_loss(model, batch);
      param.data[j] = original;
      const double fd = (loss_plus - loss_minus) / (2.0 * kStep);
      const double bp = grad_refs[t].data[j];
      max_abs_diff = std::max(max_abs_diff, std::abs(bp - fd));
      max_abs_grad = std::max({max_abs_grad, std::abs(bp), std::abs(fd)});
    }
    // The 1e-5 floor keeps tensors whose true gradient vanishes by symmetry
    // (key bias: softmax ignores constant key shifts) from dividing finite-
    // difference noise by itself.
    const double relative = max_abs_diff / std::max(max_abs_grad, 1e-5);
    report.tensors.push_back({param.name, relative});
    report.max_relative_error = std::max(report.max_relative_error, relative);
  }
  report.passed = report.max_relative_error < report.tolerance;
  return report;
}

int cmd_gradcheck(const GradcheckOptions& options, std::ostream& log) {
  const auto report = run_gradcheck(options);
  for (const auto& tensor : report.tensors) {
    log << tensor.name << ": max relative error "
        << format_double(tensor.max_relative_error)
        << (tensor.max_relative_error < report.tolerance ? "" : "  <-- FAIL") << '\n';
  }
  if (report.passed) {
    log << "PASS: max relative error " << format_double(report.max_relative_error)
        << " < " << format_double(report.tolerance) << '\n';
    return 0;
  }
  for (const auto& tensor : report.tensors) {
    if (tensor.max_relative_error >= report.tolerance) {
      log << "FAIL: tensor " << tensor.name << " relative error "
          << format_double(tensor.max_relative_error) << " >= "
          << format_double(report.tolerance) << '\n';
    }
  }
  return 1;
}

}  // namespace uescore::cli
