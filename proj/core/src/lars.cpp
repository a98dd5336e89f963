#include "uescore/lars.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "lars_internal.hpp"
#include "uescore/errors.hpp"
#include "uescore/numerics.hpp"
#include "uescore/rng.hpp"

namespace uescore::lars {

// ---------------------------------------------------------------------------
// Probability partition

int ProbPartition::bin_of(double p) const {
  p = std::clamp(p, 0.0, 1.0);
  const auto it = std::lower_bound(boundaries.begin(), boundaries.end(), p);
  return static_cast<int>(it - boundaries.begin());
}

void ProbPartition::validate() const {
  if (k < 2) throw Error("partition: k must be >= 2");
  if (d < 1 || d % k != 0) throw Error("partition: d must be a positive multiple of k");
  if (boundaries.size() != static_cast<std::size_t>(k - 1)) {
    throw Error("partition: expected k-1 boundaries");
  }
  double prev = 0.0;
  for (double b : boundaries) {
    if (!(b > prev && b < 1.0)) {
      throw Error("partition: boundaries must ascend strictly inside (0, 1)");
    }
    prev = b;
  }
  if (scale <= 0.0) throw Error("partition: scale must be positive");
}

ProbPartition fit_partition(const std::vector<CalibrationExample>& calibration,
                            int k, int d) {
  if (k < 2) throw Error("fit_partition: k must be >= 2");
  if (d < 1 || d % k != 0) throw Error("fit_partition: d must be a positive multiple of k");

  std::vector<double> pooled;
  for (const auto& example : calibration) {
    for (double lp : example.answer_trace.logprobs) {
      pooled.push_back(std::exp(lp));
    }
  }
  const std::set<double> distinct(pooled.begin(), pooled.end());
  if (distinct.size() < static_cast<std::size_t>(k)) {
    throw Error("fit_partition: needs at least k distinct probability values, got " +
                std::to_string(distinct.size()));
  }

  ProbPartition partition;
  partition.k = k;
  partition.d = d;
  partition.scale = std::sqrt(static_cast<double>(d) / static_cast<double>(k));
  partition.boundaries.resize(static_cast<std::size_t>(k - 1));
  for (int r = 1; r < k; ++r) {
    partition.boundaries[static_cast<std::size_t>(r - 1)] =
        numerics::quantile(pooled, static_cast<double>(r) / static_cast<double>(k));
  }

  // Coincident quantiles (heavy ties in the pool) are nudged apart by one ulp;
  // everything must stay strictly inside (0, 1).
  auto& bounds = partition.boundaries;
  const double lo = std::nextafter(0.0, 1.0);
  const double hi = std::nextafter(1.0, 0.0);
  for (double& b : bounds) b = std::clamp(b, lo, hi);
  for (std::size_t i = 1; i < bounds.size(); ++i) {
    if (bounds[i] <= bounds[i - 1]) {
      bounds[i] = std::nextafter(bounds[i - 1], std::numeric_limits<double>::infinity());
    }
  }
  if (bounds.back() >= 1.0) {
    // Ran out of headroom at the top; push down from the right instead.
    bounds.back() = hi;
    for (std::size_t i = bounds.size() - 1; i > 0; --i) {
      if (bounds[i - 1] >= bounds[i]) bounds[i - 1] = std::nextafter(bounds[i], 0.0);
    }
  }
  partition.validate();
  return partition;
}

Eigen::VectorXd encode_probability(double p, const ProbPartition& partition) {
  partition.validate();
  Eigen::VectorXd vec = Eigen::VectorXd::Zero(partition.d);
  const int width = partition.d / partition.k;
  const int bin = partition.bin_of(p);
  vec.segment(bin * width, width).setConstant(1.0 / partition.scale);
  return vec;
}

// ---------------------------------------------------------------------------
// Config and tokenizer

void LarsConfig::validate() const {
  if (d < 1) throw Error("config: d must be positive");
  if (layers < 1) throw Error("config: layers must be positive");
  if (heads < 1 || d % heads != 0) throw Error("config: d must be a positive multiple of heads");
  if (k < 2 || d % k != 0) throw Error("config: d must be a positive multiple of k, k >= 2");
  if (vocab_size < 8) throw Error("config: vocab_size must be >= 8");
  if (max_len < 2) throw Error("config: max_len must be >= 2");
  if (text_only && prob_only) throw Error("config: text_only and prob_only are mutually exclusive");
}

namespace {

bool is_unicode_whitespace(char32_t cp) {
  switch (cp) {
    case 0x0009: case 0x000A: case 0x000B: case 0x000C: case 0x000D:
    case 0x0020: case 0x0085: case 0x00A0: case 0x1680:
    case 0x2000: case 0x2001: case 0x2002: case 0x2003: case 0x2004:
    case 0x2005: case 0x2006: case 0x2007: case 0x2008: case 0x2009:
    case 0x200A: case 0x2028: case 0x2029: case 0x202F: case 0x205F:
    case 0x3000:
      return true;
    default:
      return false;
  }
}

// Decodes the next UTF-8 code point; malformed bytes pass through as-is so the
// split stays deterministic on arbitrary input.
char32_t next_code_point(std::string_view text, std::size_t& i) {
  const auto byte = static_cast<unsigned char>(text[i]);
  int extra = 0;
  char32_t cp = byte;
  if (byte >= 0xF0) { extra = 3; cp = byte & 0x07u; }
  else if (byte >= 0xE0) { extra = 2; cp = byte & 0x0Fu; }
  else if (byte >= 0xC0) { extra = 1; cp = byte & 0x1Fu; }
  if (i + static_cast<std::size_t>(extra) >= text.size()) { ++i; return byte; }
  for (int j = 1; j <= extra; ++j) {
    const auto cont = static_cast<unsigned char>(text[i + static_cast<std::size_t>(j)]);
    if ((cont & 0xC0u) != 0x80u) { ++i; return byte; }
    cp = (cp << 6) | (cont & 0x3Fu);
  }
  i += static_cast<std::size_t>(extra) + 1;
  return cp;
}

}  // namespace

int token_id(std::string_view piece, int vocab_size) {
  const std::uint64_t hash = fnv1a64(piece.data(), piece.size());
  return kReservedTokens +
         static_cast<int>(hash % static_cast<std::uint64_t>(vocab_size - kReservedTokens));
}

std::vector<int> tokenize(std::string_view text, int vocab_size) {
  if (vocab_size < 8) throw Error("tokenize: vocab_size must be >= 8");
  std::vector<int> ids;
  std::size_t i = 0;
  std::size_t piece_start = 0;
  auto flush = [&](std::size_t end) {
    if (end > piece_start) {
      ids.push_back(token_id(text.substr(piece_start, end - piece_start), vocab_size));
    }
  };
  while (i < text.size()) {
    const std::size_t cp_start = i;
    const char32_t cp = next_code_point(text, i);
    if (is_unicode_whitespace(cp)) {
      flush(cp_start);
      piece_start = i;
    }
  }
  flush(text.size());
  return ids;
}

// ---------------------------------------------------------------------------
// Model construction

ParamSet zeros_like(const ParamSet& params) {
  ParamSet z;
  z.token_embeddings = Eigen::MatrixXd::Zero(params.token_embeddings.rows(),
                                             params.token_embeddings.cols());
  z.position_embeddings = Eigen::MatrixXd::Zero(params.position_embeddings.rows(),
                                                params.position_embeddings.cols());
  z.prob_embeddings = Eigen::MatrixXd::Zero(params.prob_embeddings.rows(),
                                            params.prob_embeddings.cols());
  z.blocks.resize(params.blocks.size());
  for (std::size_t i = 0; i < params.blocks.size(); ++i) {
    const auto& b = params.blocks[i];
    auto& o = z.blocks[i];
    o.attn_query = Eigen::MatrixXd::Zero(b.attn_query.rows(), b.attn_query.cols());
    o.attn_key = Eigen::MatrixXd::Zero(b.attn_key.rows(), b.attn_key.cols());
    o.attn_value = Eigen::MatrixXd::Zero(b.attn_value.rows(), b.attn_value.cols());
    o.attn_out = Eigen::MatrixXd::Zero(b.attn_out.rows(), b.attn_out.cols());
    o.bias_query = Eigen::VectorXd::Zero(b.bias_query.size());
    o.bias_key = Eigen::VectorXd::Zero(b.bias_key.size());
    o.bias_value = Eigen::VectorXd::Zero(b.bias_value.size());
    o.bias_out = Eigen::VectorXd::Zero(b.bias_out.size());
    o.ln1_gain = Eigen::VectorXd::Zero(b.ln1_gain.size());
    o.ln1_bias = Eigen::VectorXd::Zero(b.ln1_bias.size());
    o.ff_in = Eigen::MatrixXd::Zero(b.ff_in.rows(), b.ff_in.cols());
    o.ff_in_bias = Eigen::VectorXd::Zero(b.ff_in_bias.size());
    o.ff_out = Eigen::MatrixXd::Zero(b.ff_out.rows(), b.ff_out.cols());
    o.ff_out_bias = Eigen::VectorXd::Zero(b.ff_out_bias.size());
    o.ln2_gain = Eigen::VectorXd::Zero(b.ln2_gain.size());
    o.ln2_bias = Eigen::VectorXd::Zero(b.ln2_bias.size());
  }
  z.final_gain = Eigen::VectorXd::Zero(params.final_gain.size());
  z.final_bias = Eigen::VectorXd::Zero(params.final_bias.size());
  z.head_weight = Eigen::VectorXd::Zero(params.head_weight.size());
  z.head_bias = 0.0;
  return z;
}

std::vector<TensorRef> parameter_tensors(ParamSet& params, const LarsConfig& config) {
  std::vector<TensorRef> refs;
  auto add = [&refs](const std::string& name, double* data, std::ptrdiff_t size,
                     bool trainable = true) {
    refs.push_back(TensorRef{name, data, size, trainable});
  };
  auto add_matrix = [&add](const std::string& name, Eigen::MatrixXd& m,
                           bool trainable = true) {
    add(name, m.data(), m.size(), trainable);
  };
  auto add_vector = [&add](const std::string& name, Eigen::VectorXd& v,
                           bool trainable = true) {
    add(name, v.data(), v.size(), trainable);
  };

  add_matrix("token_embeddings", params.token_embeddings);
  add_matrix("position_embeddings", params.position_embeddings);
  add_matrix("prob_embeddings", params.prob_embeddings,
             config.prob_embeddings_trainable);
  for (std::size_t i = 0; i < params.blocks.size(); ++i) {
    auto& b = params.blocks[i];
    const std::string prefix = "block" + std::to_string(i) + ".";
    add_matrix(prefix + "attn_query", b.attn_query);
    add_vector(prefix + "bias_query", b.bias_query);
    add_matrix(prefix + "attn_key", b.attn_key);
    add_vector(prefix + "bias_key", b.bias_key);
    add_matrix(prefix + "attn_value", b.attn_value);
    add_vector(prefix + "bias_value", b.bias_value);
    add_matrix(prefix + "attn_out", b.attn_out);
    add_vector(prefix + "bias_out", b.bias_out);
    add_vector(prefix + "ln1_gain", b.ln1_gain);
    add_vector(prefix + "ln1_bias", b.ln1_bias);
    add_matrix(prefix + "ff_in", b.ff_in);
    add_vector(prefix + "ff_in_bias", b.ff_in_bias);
    add_matrix(prefix + "ff_out", b.ff_out);
    add_vector(prefix + "ff_out_bias", b.ff_out_bias);
    add_vector(prefix + "ln2_gain", b.ln2_gain);
    add_vector(prefix + "ln2_bias", b.ln2_bias);
  }
  add_vector("final_gain", params.final_gain);
  add_vector("final_bias", params.final_bias);
  add_vector("head_weight", params.head_weight);
  add("head_bias", &params.head_bias, 1);
  return refs;
}

LarsModel init_model(const LarsConfig& config, const ProbPartition& partition) {
  config.validate();
  partition.validate();
  if (partition.k != config.k || partition.d != config.d) {
    throw Error("init_model: partition geometry does not match config (k, d)");
  }

  Rng rng(config.seed);
  const int d = config.d;
  auto xavier_matrix = [&rng](int rows, int cols) {
    Eigen::MatrixXd m(rows, cols);
    const double stddev = std::sqrt(2.0 / static_cast<double>(rows + cols));
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = rng.normal(0.0, stddev);
    return m;
  };

  LarsModel model;
  model.config = config;
  model.partition = partition;
  auto& p = model.params;

  p.token_embeddings.resize(config.vocab_size, d);
  const double embed_std = 1.0 / std::sqrt(static_cast<double>(d));
  for (Eigen::Index j = 0; j < p.token_embeddings.cols(); ++j)
    for (Eigen::Index i = 0; i < p.token_embeddings.rows(); ++i)
      p.token_embeddings(i, j) = rng.normal(0.0, embed_std);

  p.position_embeddings = Eigen::MatrixXd::Zero(config.max_len, d);

  p.prob_embeddings = Eigen::MatrixXd::Zero(config.k, d);
  const int width = d / config.k;
  for (int bin = 0; bin < config.k; ++bin) {
    p.prob_embeddings.row(bin).segment(bin * width, width)
        .setConstant(1.0 / partition.scale);
  }

  p.blocks.resize(static_cast<std::size_t>(config.layers));
  for (auto& b : p.blocks) {
    b.attn_query = xavier_matrix(d, d);
    b.attn_key = xavier_matrix(d, d);
    b.attn_value = xavier_matrix(d, d);
    b.attn_out = xavier_matrix(d, d);
    b.bias_query = Eigen::VectorXd::Zero(d);
    b.bias_key = Eigen::VectorXd::Zero(d);
    b.bias_value = Eigen::VectorXd::Zero(d);
    b.bias_out = Eigen::VectorXd::Zero(d);
    b.ln1_gain = Eigen::VectorXd::Ones(d);
    b.ln1_bias = Eigen::VectorXd::Zero(d);
    b.ff_in = xavier_matrix(d, 4 * d);
    b.ff_in_bias = Eigen::VectorXd::Zero(4 * d);
    b.ff_out = xavier_matrix(4 * d, d);
    b.ff_out_bias = Eigen::VectorXd::Zero(d);
    b.ln2_gain = Eigen::VectorXd::Ones(d);
    b.ln2_bias = Eigen::VectorXd::Zero(d);
  }
  p.final_gain = Eigen::VectorXd::Ones(d);
  p.final_bias = Eigen::VectorXd::Zero(d);
  p.head_weight.resize(d);
  const double head_std = std::sqrt(2.0 / static_cast<double>(d + 1));
  for (Eigen::Index i = 0; i < d; ++i) p.head_weight(i) = rng.normal(0.0, head_std);
  p.head_bias = 0.0;
  return model;
}

// ---------------------------------------------------------------------------
// Input assembly

LarsInput build_input(const LarsConfig& config, const ProbPartition& partition,
                      std::string_view question, const TokenTrace& trace) {
  config.validate();
  partition.validate();
  trace.validate();
  if (partition.k != config.k || partition.d != config.d) {
    throw Error("build_input: partition geometry does not match config");
  }

  const bool with_question = config.include_question && !config.prob_only;
  const bool with_separator = !config.prob_only;
  const bool with_probabilities = !config.text_only;
  const int slots_per_answer_token =
      (config.prob_only || config.text_only ||
       config.association == Association::kAdditive)
          ? 1
          : 2;

  std::vector<int> question_ids =
      with_question ? tokenize(question, config.vocab_size) : std::vector<int>{};
  const auto answer_len = static_cast<int>(trace.length());

  const int fixed = 1 + (with_separator ? 1 : 0);
  int question_keep = static_cast<int>(question_ids.size());
  int answer_keep = answer_len;

  if (fixed + question_keep + slots_per_answer_token * answer_keep > config.max_len) {
    question_keep = std::max(0, config.max_len - fixed - slots_per_answer_token * answer_keep);
    if (fixed + question_keep + slots_per_answer_token * answer_keep > config.max_len) {
      answer_keep = (config.max_len - fixed) / slots_per_answer_token;
    }
  }
  if (answer_keep < 1) {
    throw Error("build_input: answer does not fit in max_len " +
                std::to_string(config.max_len));
  }

  LarsInput input;
  input.slots.push_back(InputSlot{kClsToken, -1});
  const auto question_drop = static_cast<std::size_t>(
      static_cast<int>(question_ids.size()) - question_keep);
  for (std::size_t i = question_drop; i < question_ids.size(); ++i) {
    input.slots.push_back(InputSlot{question_ids[i], -1});
  }
  if (with_separator) input.slots.push_back(InputSlot{kSepToken, -1});

  for (int i = 0; i < answer_keep; ++i) {
    const auto idx = static_cast<std::size_t>(i);
    const int bin = with_probabilities
                        ? partition.bin_of(std::exp(trace.logprobs[idx]))
                        : -1;
    if (config.prob_only) {
      input.slots.push_back(InputSlot{-1, bin});
    } else if (config.association == Association::kAdditive || config.text_only) {
      input.slots.push_back(InputSlot{token_id(trace.tokens[idx], config.vocab_size), bin});
    } else {
      input.slots.push_back(InputSlot{token_id(trace.tokens[idx], config.vocab_size), -1});
      input.slots.push_back(InputSlot{-1, bin});
    }
  }
  input.valid_len = static_cast<int>(input.slots.size());
  return input;
}

Eigen::MatrixXd embed_input(const LarsModel& model, const LarsInput& input) {
  const auto total = static_cast<Eigen::Index>(input.slots.size());
  if (total > model.config.max_len) throw Error("embed_input: sequence exceeds max_len");
  if (input.valid_len < 1 || input.valid_len > total) {
    throw Error("embed_input: invalid valid_len");
  }
  Eigen::MatrixXd x(total, model.config.d);
  for (Eigen::Index t = 0; t < total; ++t) {
    const auto& slot = input.slots[static_cast<std::size_t>(t)];
    x.row(t) = model.params.position_embeddings.row(t);
    if (slot.token_id >= 0) {
      if (slot.token_id >= model.config.vocab_size) {
        throw Error("embed_input: token id out of range");
      }
      x.row(t) += model.params.token_embeddings.row(slot.token_id);
    }
    if (slot.prob_bin >= 0) {
      if (slot.prob_bin >= model.config.k) throw Error("embed_input: prob bin out of range");
      x.row(t) += model.params.prob_embeddings.row(slot.prob_bin);
    }
  }
  return x;
}

// ---------------------------------------------------------------------------
// Forward pass

namespace detail {

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x / std::sqrt(2.0))); }

double gelu_derivative(double x) {
  const double cdf = 0.5 * (1.0 + std::erf(x / std::sqrt(2.0)));
  const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * 3.14159265358979323846);
  return cdf + x * pdf;
}

namespace {

// Row-wise layer norm; fills xhat (normalized rows) and per-row 1/std.
Eigen::MatrixXd layer_norm(const Eigen::MatrixXd& x, const Eigen::VectorXd& gain,
                           const Eigen::VectorXd& bias, Eigen::MatrixXd& xhat,
                           Eigen::VectorXd& invstd) {
  const Eigen::Index rows = x.rows(), cols = x.cols();
  xhat.resize(rows, cols);
  invstd.resize(rows);
  Eigen::MatrixXd y(rows, cols);
  for (Eigen::Index t = 0; t < rows; ++t) {
    const double mean = x.row(t).mean();
    const double var = (x.row(t).array() - mean).square().sum() /
                       static_cast<double>(cols);
    invstd(t) = 1.0 / std::sqrt(var + kLayerNormEps);
    xhat.row(t) = (x.row(t).array() - mean) * invstd(t);
    y.row(t) = xhat.row(t).cwiseProduct(gain.transpose()) + bias.transpose();
  }
  return y;
}

Eigen::RowVectorXd softmax_row(const Eigen::RowVectorXd& scores) {
  const double max = scores.maxCoeff();
  Eigen::RowVectorXd e = (scores.array() - max).exp();
  return e / e.sum();
}

}  // namespace

double forward_cached(const LarsModel& model, const LarsInput& input,
                      ForwardCache& cache) {
  const auto& config = model.config;
  const int heads = config.heads;
  const int head_dim = config.d / heads;
  const double attn_scale = 1.0 / std::sqrt(static_cast<double>(head_dim));

  cache.x0 = embed_input(model, input);
  const Eigen::Index total = cache.x0.rows();
  const Eigen::Index valid = input.valid_len;

  Eigen::MatrixXd x = cache.x0;
  cache.blocks.assign(model.params.blocks.size(), BlockCache{});
  for (std::size_t layer = 0; layer < model.params.blocks.size(); ++layer) {
    const auto& b = model.params.blocks[layer];
    auto& c = cache.blocks[layer];
    c.x_in = x;

    const Eigen::MatrixXd normed =
        layer_norm(x, b.ln1_gain, b.ln1_bias, c.ln1_xhat, c.ln1_invstd);
    c.query = (normed * b.attn_query).rowwise() + b.bias_query.transpose();
    c.key = (normed * b.attn_key).rowwise() + b.bias_key.transpose();
    c.value = (normed * b.attn_value).rowwise() + b.bias_value.transpose();

    c.attn.assign(static_cast<std::size_t>(heads), Eigen::MatrixXd());
    c.attn_concat.resize(total, config.d);
    for (int h = 0; h < heads; ++h) {
      const auto cols = Eigen::seqN(h * head_dim, head_dim);
      Eigen::MatrixXd scores =
          attn_scale * (c.query(Eigen::all, cols) * c.key(Eigen::all, cols).transpose());
      for (Eigen::Index j = valid; j < total; ++j) scores.col(j).array() += kMaskValue;
      Eigen::MatrixXd& weights = c.attn[static_cast<std::size_t>(h)];
      weights.resize(total, total);
      for (Eigen::Index t = 0; t < total; ++t) {
        weights.row(t) = softmax_row(scores.row(t));
      }
      c.attn_concat(Eigen::all, cols) = weights * c.value(Eigen::all, cols);
    }
    c.x_mid = x + ((c.attn_concat * b.attn_out).rowwise() + b.bias_out.transpose());

    const Eigen::MatrixXd normed2 =
        layer_norm(c.x_mid, b.ln2_gain, b.ln2_bias, c.ln2_xhat, c.ln2_invstd);
    c.ff_pre = (normed2 * b.ff_in).rowwise() + b.ff_in_bias.transpose();
    c.ff_act = c.ff_pre.unaryExpr([](double v) { return gelu(v); });
    x = c.x_mid + ((c.ff_act * b.ff_out).rowwise() + b.ff_out_bias.transpose());
  }

  // Final layer norm on the [CLS] row only; nothing else is read.
  const Eigen::RowVectorXd cls = x.row(0);
  const double mean = cls.mean();
  const double var =
      (cls.array() - mean).square().sum() / static_cast<double>(config.d);
  cache.final_invstd = 1.0 / std::sqrt(var + kLayerNormEps);
  cache.final_xhat = ((cls.array() - mean) * cache.final_invstd).transpose();
  cache.cls_hidden = cache.final_xhat.cwiseProduct(model.params.final_gain) +
                     model.params.final_bias;
  cache.logit = model.params.head_weight.dot(cache.cls_hidden) + model.params.head_bias;
  return cache.logit;
}

}  // namespace detail

double forward(const LarsModel& model, const LarsInput& input) {
  detail::ForwardCache cache;
  return detail::forward_cached(model, input, cache);
}

scoring::Score score(const LarsModel& model, std::string_view question,
                     const TokenTrace& trace) {
  const LarsInput input = build_input(model.config, model.partition, question, trace);
  const double logit = forward(model, input);
  // log sigmoid(z) = -log1p(exp(-z)), stable for large |z|.
  return scoring::Score::from_log(-std::log1p(std::exp(-logit)));
}

scoring::Scorer make_scorer(std::shared_ptr<const LarsModel> model) {
  return [model](const std::string& question, const GenerationRecord& gen) {
    return score(*model, question, gen.trace);
  };
}

LabeledInput prepare_example(const LarsConfig& config,
                             const ProbPartition& partition,
                             const CalibrationExample& example) {
  example.validate();
  return LabeledInput{build_input(config, partition, example.question,
                                  example.answer_trace),
                      example.label};
}

}  // namespace uescore::lars
