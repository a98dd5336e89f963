#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <string>

#include "lars_internal.hpp"
#include "uescore/errors.hpp"
#include "uescore/lars.hpp"
#include "uescore/metrics.hpp"
#include "uescore/rng.hpp"

namespace uescore::lars {
namespace {

using detail::ForwardCache;

constexpr double kSigmoidClamp = 1e-12;

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

double bce_loss(double sig, int label) {
  const double clamped = std::clamp(sig, kSigmoidClamp, 1.0 - kSigmoidClamp);
  return label == 1 ? -std::log(clamped) : -std::log(1.0 - clamped);
}

// d loss / d logit; zero where the sigmoid clamp is active so the analytic
// gradient agrees with finite differences everywhere.
double bce_logit_grad(double sig, int label) {
  if (sig <= kSigmoidClamp || sig >= 1.0 - kSigmoidClamp) return 0.0;
  return sig - static_cast<double>(label);
}

// Row-wise layer-norm backward; accumulates gain/bias grads, returns dx.
Eigen::MatrixXd layer_norm_backward(const Eigen::MatrixXd& dy,
                                    const Eigen::MatrixXd& xhat,
                                    const Eigen::VectorXd& invstd,
                                    const Eigen::VectorXd& gain,
                                    Eigen::VectorXd& dgain,
                                    Eigen::VectorXd& dbias) {
  const Eigen::Index rows = dy.rows(), cols = dy.cols();
  Eigen::MatrixXd dx(rows, cols);
  for (Eigen::Index t = 0; t < rows; ++t) {
    dgain += dy.row(t).cwiseProduct(xhat.row(t)).transpose();
    dbias += dy.row(t).transpose();
    const Eigen::RowVectorXd g = dy.row(t).cwiseProduct(gain.transpose());
    const double mean_g = g.mean();
    const double mean_gx = g.cwiseProduct(xhat.row(t)).mean();
    dx.row(t) =
        invstd(t) * (g.array() - mean_g - xhat.row(t).array() * mean_gx);
  }
  return dx;
}

void backward_example(const LarsModel& model, const LarsInput& input,
                      const ForwardCache& cache, double dlogit,
                      ParamSet& grads) {
  const auto& config = model.config;
  const int heads = config.heads;
  const int head_dim = config.d / heads;
  const double attn_scale = 1.0 / std::sqrt(static_cast<double>(head_dim));

  grads.head_weight += dlogit * cache.cls_hidden;
  grads.head_bias += dlogit;
  const Eigen::VectorXd dcls = dlogit * model.params.head_weight;

  // Final layer norm touches only the [CLS] row.
  grads.final_gain += dcls.cwiseProduct(cache.final_xhat);
  grads.final_bias += dcls;
  const Eigen::VectorXd g = dcls.cwiseProduct(model.params.final_gain);
  const double mean_g = g.mean();
  const double mean_gx = g.cwiseProduct(cache.final_xhat).mean();
  Eigen::MatrixXd dx = Eigen::MatrixXd::Zero(cache.x0.rows(), config.d);
  dx.row(0) = (cache.final_invstd *
               (g.array() - mean_g - cache.final_xhat.array() * mean_gx))
                  .transpose();

  for (std::size_t layer = model.params.blocks.size(); layer-- > 0;) {
    const auto& b = model.params.blocks[layer];
    const auto& c = cache.blocks[layer];
    auto& gb = grads.blocks[layer];

    // Feed-forward sublayer: x_out = x_mid + gelu(LN2(x_mid) W1 + b1) W2 + b2.
    const Eigen::MatrixXd& d_out = dx;
    gb.ff_out += c.ff_act.transpose() * d_out;
    gb.ff_out_bias += d_out.colwise().sum().transpose();
    const Eigen::MatrixXd d_act = d_out * b.ff_out.transpose();
    const Eigen::MatrixXd d_pre = d_act.cwiseProduct(
        c.ff_pre.unaryExpr([](double v) { return detail::gelu_derivative(v); }));

    Eigen::MatrixXd normed2 = c.ln2_xhat;
    normed2.array().rowwise() *= b.ln2_gain.transpose().array();
    normed2.rowwise() += b.ln2_bias.transpose();
    gb.ff_in += normed2.transpose() * d_pre;
    gb.ff_in_bias += d_pre.colwise().sum().transpose();
    const Eigen::MatrixXd d_normed2 = d_pre * b.ff_in.transpose();
    Eigen::MatrixXd d_mid =
        dx + layer_norm_backward(d_normed2, c.ln2_xhat, c.ln2_invstd,
                                 b.ln2_gain, gb.ln2_gain, gb.ln2_bias);

    // Attention sublayer: x_mid = x_in + concat(heads) Wo + bo.
    gb.attn_out += c.attn_concat.transpose() * d_mid;
    gb.bias_out += d_mid.colwise().sum().transpose();
    const Eigen::MatrixXd d_concat = d_mid * b.attn_out.transpose();

    Eigen::MatrixXd d_query = Eigen::MatrixXd::Zero(d_mid.rows(), config.d);
    Eigen::MatrixXd d_key = Eigen::MatrixXd::Zero(d_mid.rows(), config.d);
    Eigen::MatrixXd d_value = Eigen::MatrixXd::Zero(d_mid.rows(), config.d);
    for (int h = 0; h < heads; ++h) {
      const auto cols = Eigen::seqN(h * head_dim, head_dim);
      const Eigen::MatrixXd& weights = c.attn[static_cast<std::size_t>(h)];
      const Eigen::MatrixXd d_head = d_concat(Eigen::all, cols);
      const Eigen::MatrixXd d_weights =
          d_head * c.value(Eigen::all, cols).transpose();
      d_value(Eigen::all, cols) = weights.transpose() * d_head;

      // Softmax backward per row.
      Eigen::MatrixXd d_scores(weights.rows(), weights.cols());
      for (Eigen::Index t = 0; t < weights.rows(); ++t) {
        const double dot = d_weights.row(t).dot(weights.row(t));
        d_scores.row(t) =
            weights.row(t).array() * (d_weights.row(t).array() - dot);
      }
      d_query(Eigen::all, cols) =
          attn_scale * (d_scores * c.key(Eigen::all, cols));
      d_key(Eigen::all, cols) =
          attn_scale * (d_scores.transpose() * c.query(Eigen::all, cols));
    }

    Eigen::MatrixXd normed1 = c.ln1_xhat;
    normed1.array().rowwise() *= b.ln1_gain.transpose().array();
    normed1.rowwise() += b.ln1_bias.transpose();
    gb.attn_query += normed1.transpose() * d_query;
    gb.bias_query += d_query.colwise().sum().transpose();
    gb.attn_key += normed1.transpose() * d_key;
    gb.bias_key += d_key.colwise().sum().transpose();
    gb.attn_value += normed1.transpose() * d_value;
    gb.bias_value += d_value.colwise().sum().transpose();

    const Eigen::MatrixXd d_normed1 = d_query * b.attn_query.transpose() +
                                      d_key * b.attn_key.transpose() +
                                      d_value * b.attn_value.transpose();
    dx = d_mid + layer_norm_backward(d_normed1, c.ln1_xhat, c.ln1_invstd,
                                     b.ln1_gain, gb.ln1_gain, gb.ln1_bias);
  }

  for (Eigen::Index t = 0; t < dx.rows(); ++t) {
    const auto& slot = input.slots[static_cast<std::size_t>(t)];
    grads.position_embeddings.row(t) += dx.row(t);
    if (slot.token_id >= 0) grads.token_embeddings.row(slot.token_id) += dx.row(t);
    if (slot.prob_bin >= 0) grads.prob_embeddings.row(slot.prob_bin) += dx.row(t);
  }
}

}  // namespace

double batch_loss(const LarsModel& model, const std::vector<LabeledInput>& batch) {
  if (batch.empty()) throw Error("batch_loss: empty batch");
  double total = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const double logit = forward(model, batch[i].input);
    const double loss = bce_loss(sigmoid(logit), batch[i].label);
    if (!std::isfinite(loss)) {
      throw Error("non-finite loss at batch index " + std::to_string(i));
    }
    total += loss;
  }
  return total / static_cast<double>(batch.size());
}

std::pair<double, ParamSet> loss_and_gradients(
    const LarsModel& model, const std::vector<LabeledInput>& batch) {
  if (batch.empty()) throw Error("loss_and_gradients: empty batch");
  ParamSet grads = zeros_like(model.params);
  const double inv_batch = 1.0 / static_cast<double>(batch.size());

  double total = 0.0;
  ForwardCache cache;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const double logit = detail::forward_cached(model, batch[i].input, cache);
    const double sig = sigmoid(logit);
    const double loss = bce_loss(sig, batch[i].label);
    if (!std::isfinite(loss)) {
      throw Error("non-finite loss at batch index " + std::to_string(i));
    }
    total += loss;
    backward_example(model, batch[i].input, cache,
                     bce_logit_grad(sig, batch[i].label) * inv_batch, grads);
  }

  if (!model.config.prob_embeddings_trainable) {
    grads.prob_embeddings.setZero();
  }
  return {total * inv_batch, std::move(grads)};
}

std::vector<EpochMetrics> train(LarsModel& model,
                                const std::vector<CalibrationExample>& train_set,
                                const std::vector<CalibrationExample>& holdout,
                                const AdamWParams& optimizer, int epochs,
                                int batch_size, std::uint64_t seed) {
  if (train_set.empty()) throw Error("train: empty training set");
  if (epochs < 0) throw Error("train: epochs must be >= 0");
  if (batch_size < 1) throw Error("train: batch_size must be >= 1");

  std::vector<LabeledInput> train_inputs;
  train_inputs.reserve(train_set.size());
  for (const auto& example : train_set) {
    train_inputs.push_back(prepare_example(model.config, model.partition, example));
  }
  std::vector<LabeledInput> holdout_inputs;
  holdout_inputs.reserve(holdout.size());
  for (const auto& example : holdout) {
    holdout_inputs.push_back(prepare_example(model.config, model.partition, example));
  }

  ParamSet moment1 = zeros_like(model.params);
  ParamSet moment2 = zeros_like(model.params);
  const auto params = parameter_tensors(model.params, model.config);
  const auto m1 = parameter_tensors(moment1, model.config);
  const auto m2 = parameter_tensors(moment2, model.config);

  Rng rng(seed);
  std::vector<std::size_t> order(train_inputs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<EpochMetrics> trajectory;
  long long step = 0;
  for (int epoch = 1; epoch <= epochs; ++epoch) {
    rng.shuffle(order);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(batch_size)) {
      const std::size_t end =
          std::min(order.size(), start + static_cast<std::size_t>(batch_size));
      std::vector<LabeledInput> batch;
      batch.reserve(end - start);
      for (std::size_t i = start; i < end; ++i) batch.push_back(train_inputs[order[i]]);

      auto [loss, grads] = loss_and_gradients(model, batch);
      loss_sum += loss * static_cast<double>(batch.size());

      ++step;
      const double bias1 = 1.0 - std::pow(optimizer.beta1, static_cast<double>(step));
      const double bias2 = 1.0 - std::pow(optimizer.beta2, static_cast<double>(step));
      const auto grad_refs = parameter_tensors(grads, model.config);
      for (std::size_t t = 0; t < params.size(); ++t) {
        if (!params[t].trainable) continue;
        double* theta = params[t].data;
        double* m = m1[t].data;
        double* v = m2[t].data;
        const double* grad = grad_refs[t].data;
        for (std::ptrdiff_t j = 0; j < params[t].size; ++j) {
          m[j] = optimizer.beta1 * m[j] + (1.0 - optimizer.beta1) * grad[j];
          v[j] = optimizer.beta2 * v[j] + (1.0 - optimizer.beta2) * grad[j] * grad[j];
          const double m_hat = m[j] / bias1;
          const double v_hat = v[j] / bias2;
          theta[j] -= optimizer.learning_rate * m_hat / (std::sqrt(v_hat) + optimizer.epsilon);
          theta[j] -= optimizer.learning_rate * optimizer.weight_decay * theta[j];
        }
      }
    }

    EpochMetrics epoch_metrics;
    epoch_metrics.epoch = epoch;
    epoch_metrics.train_loss = loss_sum / static_cast<double>(train_inputs.size());
    epoch_metrics.holdout_loss = nan;
    epoch_metrics.holdout_auroc = nan;
    if (!holdout_inputs.empty()) {
      epoch_metrics.holdout_loss = batch_loss(model, holdout_inputs);
      std::vector<double> uncertainties;
      std::vector<int> labels;
      uncertainties.reserve(holdout_inputs.size());
      for (const auto& item : holdout_inputs) {
        uncertainties.push_back(-sigmoid(forward(model, item.input)));
        labels.push_back(item.label);
      }
      try {
        epoch_metrics.holdout_auroc = metrics::auroc(uncertainties, labels);
      } catch (const Error&) {
        // single-class holdout; leave NaN
      }
    }
    trajectory.push_back(epoch_metrics);
  }
  return trajectory;
}

void write_metrics_csv(const std::filesystem::path& path,
                       const std::vector<EpochMetrics>& metrics,
                       const std::vector<std::string>& header_comments) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  auto fmt = [](double v) {
    char buffer[40];
    std::snprintf(buffer, sizeof(buffer), "%.17g", v);
    return std::string(buffer);
  };
  for (const auto& comment : header_comments) out << "# " << comment << '\n';
  out << "epoch,train_loss,holdout_loss,holdout_auroc\n";
  for (const auto& row : metrics) {
    out << row.epoch << ',' << fmt(row.train_loss) << ',' << fmt(row.holdout_loss)
        << ',' << fmt(row.holdout_auroc) << '\n';
  }
  if (!out) throw Error("I/O failure writing " + path.string());
}

}  // namespace uescore::lars
