#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "uescore/cli.hpp"
#include "uescore/errors.hpp"

namespace {

using uescore::cli::RunConfig;

// Config-file values load before flag parsing, so explicitly passed flags
// overwrite them.
std::string find_config_path(int argc, char** argv) {
  for (int i = 1; i < argc - 1; ++i) {
    const std::string arg = argv[i];
    if (arg == "--config" || arg == "-c") return argv[i + 1];
  }
  return {};
}

void add_common_options(CLI::App* cmd, RunConfig& config) {
  cmd->add_option("-c,--config", "TOML config file (flags override file values)")
      ->type_name("FILE");
  cmd->add_option("--seed", config.seed, "seed for every random choice");
}

void add_lars_options(CLI::App* cmd, RunConfig& config) {
  cmd->add_option("--d", config.lars.d, "embedding dimension");
  cmd->add_option("--layers", config.lars.layers, "encoder block count");
  cmd->add_option("--heads", config.lars.heads, "attention head count");
  cmd->add_option("--k", config.lars.k, "probability partition count");
  cmd->add_option("--vocab-size", config.lars.vocab_size, "hashed vocabulary size");
  cmd->add_option("--max-len", config.lars.max_len, "maximum sequence positions");
  cmd->add_option("--association",
                  [&config](const std::vector<std::string>& values) {
                    if (values[0] == "sequential") {
                      config.lars.association = uescore::lars::Association::kSequential;
                    } else if (values[0] == "additive") {
                      config.lars.association = uescore::lars::Association::kAdditive;
                    } else {
                      return false;
                    }
                    return true;
                  },
                  "probability association: sequential | additive");
  cmd->add_flag("--prob-embeddings-trainable,!--prob-embeddings-frozen",
                config.lars.prob_embeddings_trainable,
                "train the probability embeddings");
  cmd->add_flag("--include-question,!--no-question", config.lars.include_question,
                "include the question tokens in the input");
  cmd->add_flag("--text-only", config.lars.text_only, "drop probability vectors");
  cmd->add_flag("--prob-only", config.lars.prob_only, "drop all text input");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"probability-based uncertainty estimation for LLM generations"};
  app.require_subcommand(1);

  RunConfig config;
  const std::string config_path = find_config_path(argc, argv);
  if (!config_path.empty()) {
    try {
      uescore::cli::apply_config_file(config, config_path);
    } catch (const uescore::UsageError& e) {
      std::cerr << "error: " << e.what() << '\n';
      return 2;
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << '\n';
      return 1;
    }
  }

  auto* build_calib = app.add_subcommand(
      "build-calib", "curate a calibration set from labeled samples");
  build_calib->add_option("--in", config.input, "QuestionSample JSONL")->required(false);
  build_calib->add_option("--out", config.output, "calibration JSONL to write");
  build_calib->add_flag("--dedup,!--no-dedup", config.dedup,
                        "drop duplicate (question, answer) pairs");
  build_calib->add_flag("--strict,!--lenient", config.strict,
                        "abort on malformed lines instead of skipping");
  add_common_options(build_calib, config);

  auto* train = app.add_subcommand("train", "train a scoring model");
  train->add_option("--calib", config.calibration, "calibration JSONL");
  train->add_option("--out-dir", config.output_dir, "directory for model + metrics");
  train->add_option("--epochs", config.epochs, "training epochs");
  train->add_option("--batch-size", config.batch_size, "examples per update");
  train->add_option("--learning-rate", config.learning_rate, "AdamW learning rate");
  train->add_option("--weight-decay", config.weight_decay, "decoupled weight decay");
  train->add_option("--holdout-fraction", config.holdout_fraction,
                    "fraction held out for per-epoch metrics");
  add_lars_options(train, config);
  add_common_options(train, config);

  auto* score = app.add_subcommand("score", "score generations with selected scorers");
  score->add_option("--in", config.input, "QuestionSample JSONL");
  score->add_option("--out", config.output, "scores JSONL to write");
  score->add_option("--scorers", config.scorers,
                    "scorers: lns seq_prob weighted lars")->delimiter(',');
  score->add_option("--model", config.model_path, "trained model for the lars scorer");
  score->add_option("--weights", config.weights, "external per-generation weights JSONL");
  score->add_flag("--strict,!--lenient", config.strict, "");
  add_common_options(score, config);

  auto* evaluate = app.add_subcommand(
      "evaluate", "compute AUROC/PRR for every selected method");
  evaluate->add_option("--in", config.input, "QuestionSample JSONL with labels");
  evaluate->add_option("--out", config.output, "report file to write");
  evaluate->add_option("--scorers", config.scorers,
                       "scorers: lns seq_prob weighted lars")->delimiter(',');
  evaluate->add_option("--aggregators", config.aggregators,
                       "aggregators: confidence entropy se sentsar")->delimiter(',');
  evaluate->add_option("--baselines", config.baselines,
                       "baselines: lexical_similarity num_semantic_groups "
                       "degree_matrix eccentricity")->delimiter(',');
  evaluate->add_option("--model", config.model_path, "trained model for the lars scorer");
  evaluate->add_option("--weights", config.weights, "external per-generation weights JSONL");
  evaluate->add_flag("--include-most-likely,!--exclude-most-likely",
                     config.include_most_likely,
                     "count the most-likely generation among the samples");
  evaluate->add_option("--equivalence", config.equivalence,
                       "meaning-equivalence oracle: exact | rouge_l | http");
  evaluate->add_option("--rouge-threshold", config.rouge_threshold, "");
  evaluate->add_option("--entailment-url", config.entailment_url, "");
  evaluate->add_option("--entailment-timeout", config.entailment_timeout_s, "seconds");
  evaluate->add_option("--sentsar-temperature", config.sentsar_temperature, "");
  evaluate->add_option("--num-eigvecs", config.num_eigvecs, "");
  evaluate->add_option("--format", config.format, "report format: csv | json | both");
  evaluate->add_flag("--strict,!--lenient", config.strict, "");
  add_common_options(evaluate, config);

  auto* gradcheck = app.add_subcommand(
      "gradcheck", "verify backpropagation against finite differences");
  uescore::cli::GradcheckOptions gradcheck_options;
  gradcheck->add_option("--seed", gradcheck_options.seed, "");
  gradcheck->add_option("--corrupt-tensor", gradcheck_options.corrupt_tensor,
                        "test hook: corrupt this tensor's gradient")
      ->group("");  // hidden

  auto* synth = app.add_subcommand("synth", "generate synthetic benchmark data");
  uescore::synth::SynthOptions synth_options;
  std::string synth_task = "hedge";
  std::string synth_out;
  synth->add_option("--task", synth_task, "hedge | marker");
  synth->add_option("--n", synth_options.count, "sample count");
  synth->add_option("--out", synth_out, "output JSONL");
  synth->add_option("--seed", synth_options.seed, "");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (build_calib->parsed()) {
      uescore::cli::cmd_build_calib(config, std::cout);
    } else if (train->parsed()) {
      uescore::cli::cmd_train(config, std::cout);
    } else if (score->parsed()) {
      uescore::cli::cmd_score(config, std::cout);
    } else if (evaluate->parsed()) {
      uescore::cli::cmd_evaluate(config, std::cout);
    } else if (gradcheck->parsed()) {
      return uescore::cli::cmd_gradcheck(gradcheck_options, std::cout);
    } else if (synth->parsed()) {
      synth_options.task = uescore::synth::task_from_name(synth_task);
      uescore::cli::cmd_synth(synth_options, synth_out, std::cout);
    }
  } catch (const uescore::UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
