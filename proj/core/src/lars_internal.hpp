#pragma once

#include <Eigen/Dense>
#include <vector>

#include "uescore/lars.hpp"

namespace uescore::lars::detail {

constexpr double kLayerNormEps = 1e-5;
constexpr double kMaskValue = -1e30;

struct BlockCache {
  Eigen::MatrixXd x_in;         // T x d residual-stream input
  Eigen::MatrixXd ln1_xhat;     // T x d normalized (pre gain/bias)
  Eigen::VectorXd ln1_invstd;   // T
  Eigen::MatrixXd query, key, value;        // T x d (all heads side by side)
  std::vector<Eigen::MatrixXd> attn;        // per head: T x T softmax weights
  Eigen::MatrixXd attn_concat;  // T x d
  Eigen::MatrixXd x_mid;        // after attention residual
  Eigen::MatrixXd ln2_xhat;
  Eigen::VectorXd ln2_invstd;
  Eigen::MatrixXd ff_pre;       // T x 4d pre-activation
  Eigen::MatrixXd ff_act;       // T x 4d GELU output
};

struct ForwardCache {
  Eigen::MatrixXd x0;
  std::vector<BlockCache> blocks;
  Eigen::VectorXd final_xhat;  // normalized [CLS] row
  double final_invstd = 0.0;
  Eigen::VectorXd cls_hidden;  // after final layer norm gain/bias
  double logit = 0.0;
};

double forward_cached(const LarsModel& model, const LarsInput& input,
                      ForwardCache& cache);

double gelu(double x);
double gelu_derivative(double x);

}  // namespace uescore::lars::detail
