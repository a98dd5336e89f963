#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "uescore/scoring.hpp"
#include "uescore/types.hpp"

namespace uescore::lars {

/// Quantile partition of [0, 1] plus the few-hot embedding geometry.
///
/// Partition r (1-based) covers (q_{r-1}, q_r] with q_0 = 0 and q_k = 1; the
/// first partition is closed at 0. scale = sqrt(d/k) so each few-hot block has
/// unit L2 norm.
struct ProbPartition {
  std::vector<double> boundaries;  // k-1 ascending values, strictly inside (0, 1)
  int k = 0;
  int d = 0;
  double scale = 0.0;

  /// 0-based partition index containing p.
  int bin_of(double p) const;
  void validate() const;

  bool operator==(const ProbPartition&) const = default;
};

/// Boundaries are the (1/k .. (k-1)/k) empirical quantiles of all token
/// probabilities pooled over the calibration set, nudged apart by one ulp when
/// quantiles coincide. Throws Error when fewer than k distinct probability
/// values exist.
ProbPartition fit_partition(const std::vector<CalibrationExample>& calibration,
                            int k, int d);

/// Few-hot vector for p: the d/k block of partition bin_of(p) set to 1/scale.
Eigen::VectorXd encode_probability(double p, const ProbPartition& partition);

/// How a token's probability vector enters the input: as its own sequence slot
/// right after the token, or added into the token's embedding.
enum class Association { kSequential, kAdditive };

struct LarsConfig {
  int d = 64;
  int layers = 2;
  int heads = 4;
  int k = 8;
  int vocab_size = 4096;
  int max_len = 256;
  Association association = Association::kSequential;
  bool prob_embeddings_trainable = false;
  bool include_question = true;
  bool text_only = false;  // drop probability vectors from the input
  bool prob_only = false;  // drop all text; input is [CLS] + probability vectors
  std::uint64_t seed = 0;

  void validate() const;

  bool operator==(const LarsConfig&) const = default;
};

// Reserved ids in the hashed vocabulary.
inline constexpr int kPadToken = 0;
inline constexpr int kClsToken = 1;
inline constexpr int kSepToken = 2;
inline constexpr int kUnkToken = 3;
inline constexpr int kReservedTokens = 4;

/// Hash id for one token string (FNV-1a 64 into the non-reserved id range).
int token_id(std::string_view piece, int vocab_size);

/// Splits on Unicode whitespace and hashes each piece; deterministic across
/// platforms. vocab_size must be >= 8.
std::vector<int> tokenize(std::string_view text, int vocab_size);

struct EncoderBlock {
  Eigen::MatrixXd attn_query, attn_key, attn_value, attn_out;  // d x d
  Eigen::VectorXd bias_query, bias_key, bias_value, bias_out;  // d
  Eigen::VectorXd ln1_gain, ln1_bias;                          // d
  Eigen::MatrixXd ff_in;                                       // d x 4d
  Eigen::VectorXd ff_in_bias;                                  // 4d
  Eigen::MatrixXd ff_out;                                      // 4d x d
  Eigen::VectorXd ff_out_bias;                                 // d
  Eigen::VectorXd ln2_gain, ln2_bias;                          // d
};

/// All trainable tensors; doubles as the gradient / optimizer-moment container.
struct ParamSet {
  Eigen::MatrixXd token_embeddings;     // vocab_size x d
  Eigen::MatrixXd position_embeddings;  // max_len x d, zero-initialized
  Eigen::MatrixXd prob_embeddings;      // k x d, few-hot initialized
  std::vector<EncoderBlock> blocks;
  Eigen::VectorXd final_gain, final_bias;  // final layer norm
  Eigen::VectorXd head_weight;             // d
  double head_bias = 0.0;
};

ParamSet zeros_like(const ParamSet& params);

/// Flat view over one parameter tensor; `trainable` is false for frozen
/// probability embeddings.
struct TensorRef {
  std::string name;
  double* data = nullptr;
  std::ptrdiff_t size = 0;
  bool trainable = true;
};

/// Canonical tensor enumeration (fixed order: embeddings, blocks, final norm,
/// head). The same order drives optimizer updates, serialization, and
/// gradient checking.
std::vector<TensorRef> parameter_tensors(ParamSet& params, const LarsConfig& config);

struct LarsModel {
  LarsConfig config;
  ProbPartition partition;
  ParamSet params;
};

/// Seeded initialization: token embeddings N(0, 1/d), positions zero,
/// probability embeddings few-hot per the partition, Xavier-normal
/// projections, identity layer norms, zero biases.
LarsModel init_model(const LarsConfig& config, const ProbPartition& partition);

/// One slot of the assembled input sequence. token_id < 0 means the slot
/// holds only a probability vector; prob_bin < 0 means none embeds here.
struct InputSlot {
  int token_id = kPadToken;
  int prob_bin = -1;
};

struct LarsInput {
  std::vector<InputSlot> slots;
  int valid_len = 0;  // slots at index >= valid_len are padding
};

/// Assembles the slot layout for (question, answer trace).
///
/// Sequential layout: [CLS] question [SEP] token, prob, token, prob, ...;
/// additive folds each probability vector into its token's slot; text_only
/// drops probability vectors; prob_only emits [CLS] + probability slots.
/// Over-length inputs drop question tokens from the left first, then whole
/// answer pairs from the right; throws Error when no answer token fits.
LarsInput build_input(const LarsConfig& config, const ProbPartition& partition,
                      std::string_view question, const TokenTrace& trace);

/// Embedding lookup: token + probability + position embedding per slot.
Eigen::MatrixXd embed_input(const LarsModel& model, const LarsInput& input);

/// Pre-layer-norm transformer encoder over the embedded input; returns the
/// logit read from the [CLS] position. Padding slots are masked out of
/// attention and cannot influence the result.
double forward(const LarsModel& model, const LarsInput& input);

/// logistic(logit) wrapped as a Score, so the model drops into every
/// aggregator behind the common scorer interface.
scoring::Score score(const LarsModel& model, std::string_view question,
                     const TokenTrace& trace);
scoring::Scorer make_scorer(std::shared_ptr<const LarsModel> model);

struct LabeledInput {
  LarsInput input;
  int label = 0;
};

LabeledInput prepare_example(const LarsConfig& config,
                             const ProbPartition& partition,
                             const CalibrationExample& example);

/// Mean binary cross-entropy over the batch, sigmoid output clamped to
/// [1e-12, 1 - 1e-12]. Throws Error (naming the batch index) on a non-finite
/// loss.
double batch_loss(const LarsModel& model, const std::vector<LabeledInput>& batch);

/// Loss plus full reverse-mode gradients. Frozen probability embeddings
/// receive exactly zero gradient.
std::pair<double, ParamSet> loss_and_gradients(
    const LarsModel& model, const std::vector<LabeledInput>& batch);

struct AdamWParams {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.01;  // decoupled
};

struct EpochMetrics {
  int epoch = 0;
  double train_loss = 0.0;
  double holdout_loss = 0.0;   // NaN when holdout is empty
  double holdout_auroc = 0.0;  // NaN when undefined (empty or single-class)
};

/// Seeded AdamW training: per-epoch shuffle, batched updates, per-epoch
/// holdout BCE and AUROC. Mutates the model in place and returns the metric
/// trajectory; epochs = 0 leaves the model untouched.
std::vector<EpochMetrics> train(LarsModel& model,
                                const std::vector<CalibrationExample>& train_set,
                                const std::vector<CalibrationExample>& holdout,
                                const AdamWParams& optimizer, int epochs,
                                int batch_size, std::uint64_t seed);

/// epoch,train_loss,holdout_loss,holdout_auroc rows.
void write_metrics_csv(const std::filesystem::path& path,
                       const std::vector<EpochMetrics>& metrics,
                       const std::vector<std::string>& header_comments = {});

/// Versioned, checksummed binary container holding config, partition, and all
/// parameters; load(save(m)) is bit-identical.
void save_model(const LarsModel& model, const std::filesystem::path& path);
LarsModel load_model(const std::filesystem::path& path);

}  // namespace uescore::lars
