#pragma once

#include <cstdint>
#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "uescore/lars.hpp"
#include "uescore/synth.hpp"

namespace uescore::cli {

/// Resolved settings for one command run. Values come from built-in defaults,
/// then an optional TOML config file, then command-line flags.
struct RunConfig {
  // [data]
  std::string input;        // QuestionSample JSONL
  std::string calibration;  // CalibrationExample JSONL
  std::string output;       // report / calibration / score file
  std::string output_dir;   // training artifacts
  std::string weights;      // optional external per-generation weight file
  bool strict = true;
  bool dedup = true;

  // [scorers]
  std::vector<std::string> scorers = {"lns"};
  std::string model_path;  // trained model backing the "lars" scorer

  // [aggregators]
  std::vector<std::string> aggregators = {"confidence"};
  std::vector<std::string> baselines;
  bool include_most_likely = true;

  // [oracles]
  std::string equivalence = "rouge_l";  // exact | rouge_l | http
  double rouge_threshold = 0.5;
  std::string entailment_url;
  double entailment_timeout_s = 5.0;
  double sentsar_temperature = 0.001;
  int num_eigvecs = 2;

  // [lars]
  lars::LarsConfig lars;

  // [training]
  double learning_rate = 1e-3;
  double weight_decay = 0.01;
  int epochs = 5;
  int batch_size = 8;
  double holdout_fraction = 0.2;

  // [report]
  std::string format = "csv";  // csv | json | both

  std::uint64_t seed = 0;
};

/// Overlays values from a TOML config file; unknown sections or keys are
/// usage errors.
void apply_config_file(RunConfig& config, const std::filesystem::path& path);

/// Canonical TOML rendering of a resolved config (what cmd_train echoes).
std::string render_config(const RunConfig& config);

/// 16-hex-digit fingerprint of the canonical rendering; stamped into outputs.
std::string config_fingerprint(const RunConfig& config);

/// Commands throw Error/UsageError on failure; main maps those to exit codes.
void cmd_build_calib(const RunConfig& config, std::ostream& log);
void cmd_train(const RunConfig& config, std::ostream& log);
void cmd_score(const RunConfig& config, std::ostream& log);
void cmd_evaluate(const RunConfig& config, std::ostream& log);
void cmd_synth(const synth::SynthOptions& options,
               const std::filesystem::path& output, std::ostream& log);

struct GradcheckOptions {
  std::uint64_t seed = 0;
  /// Test hook: perturb this tensor's computed gradient so the harness must
  /// report a failure naming it.
  std::string corrupt_tensor;
};

struct GradcheckReport {
  struct TensorError {
    std::string name;
    double max_relative_error = 0.0;
  };
  std::vector<TensorError> tensors;
  double max_relative_error = 0.0;
  double tolerance = 1e-5;
  bool passed = false;
};

/// Finite-difference verification of backpropagation on a d=16, 1-layer,
/// k=4 model: central differences (h = 1e-4) against analytic gradients,
/// relative error per tensor normalized by the larger gradient magnitude.
GradcheckReport run_gradcheck(const GradcheckOptions& options);
/// Prints one line per tensor plus PASS/FAIL; returns 0 on pass, 1 on fail.
int cmd_gradcheck(const GradcheckOptions& options, std::ostream& log);

}  // namespace uescore::cli
