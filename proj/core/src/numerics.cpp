#include "uescore/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>

#include "uescore/errors.hpp"

namespace uescore::numerics {
namespace {

std::vector<std::string_view> whitespace_tokens(std::string_view text) {
  std::vector<std::string_view> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t start = i;
    while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    if (i > start) tokens.push_back(text.substr(start, i - start));
  }
  return tokens;
}

std::size_t lcs_length(const std::vector<std::string_view>& a,
                       const std::vector<std::string_view>& b) {
  if (a.empty() || b.empty()) return 0;
  // Two-row DP; rows indexed by b.
  std::vector<std::size_t> prev(b.size() + 1, 0), curr(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      if (a[i - 1] == b[j - 1]) {
        curr[j] = prev[j - 1] + 1;
      } else {
        curr[j] = std::max(prev[j], curr[j - 1]);
      }
    }
    std::swap(prev, curr);
  }
  return prev[b.size()];
}

}  // namespace

double rouge_l_f(std::string_view a, std::string_view b) {
  const auto ta = whitespace_tokens(a);
  const auto tb = whitespace_tokens(b);
  if (ta.empty() && tb.empty()) return 1.0;
  const std::size_t lcs = lcs_length(ta, tb);
  if (lcs == 0) return 0.0;
  // F = 2PR/(P+R) with P = lcs/|b|, R = lcs/|a| collapses to 2*lcs/(|a|+|b|).
  return 2.0 * static_cast<double>(lcs) /
         static_cast<double>(ta.size() + tb.size());
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw Error("quantile: empty sample");
  if (!(q >= 0.0 && q <= 1.0)) throw Error("quantile: q outside [0, 1]");
  std::sort(values.begin(), values.end());
  const double h = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(h);
  if (lo + 1 >= values.size()) return values.back();
  const double frac = h - static_cast<double>(lo);
  return values[lo] + frac * (values[lo + 1] - values[lo]);
}

namespace {

double off_diagonal_norm(const Eigen::MatrixXd& a) {
  double sum = 0.0;
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      if (i != j) sum += a(i, j) * a(i, j);
  return std::sqrt(sum);
}

}  // namespace

EigenResult symmetric_eigen(const Eigen::MatrixXd& matrix) {
  const Eigen::Index n = matrix.rows();
  if (n == 0 || matrix.cols() != n) throw Error("symmetric_eigen: matrix must be square and non-empty");
  if (n > 64) throw Error("symmetric_eigen: n > 64 not supported");
  const double max_abs = matrix.cwiseAbs().maxCoeff();
  if ((matrix - matrix.transpose()).cwiseAbs().maxCoeff() >
      1e-9 * std::max(1.0, max_abs)) {
    throw Error("symmetric_eigen: input is not symmetric");
  }

  Eigen::MatrixXd a = 0.5 * (matrix + matrix.transpose());
  Eigen::MatrixXd v = Eigen::MatrixXd::Identity(n, n);
  const double norm = a.norm();
  const double threshold = 1e-12 * norm;

  constexpr int kMaxSweeps = 100;
  int sweep = 0;
  while (off_diagonal_norm(a) > threshold && sweep < kMaxSweeps) {
    for (Eigen::Index p = 0; p < n - 1; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double sign = theta >= 0.0 ? 1.0 : -1.0;
        const double t = sign / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        const double tau = s / (1.0 + c);

        const double app = a(p, p), aqq = a(q, q);
        a(p, p) = app - t * apq;
        a(q, q) = aqq + t * apq;
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        for (Eigen::Index r = 0; r < n; ++r) {
          if (r != p && r != q) {
            const double arp = a(r, p), arq = a(r, q);
            a(r, p) = arp - s * (arq + tau * arp);
            a(p, r) = a(r, p);
            a(r, q) = arq + s * (arp - tau * arq);
            a(q, r) = a(r, q);
          }
          const double vrp = v(r, p), vrq = v(r, q);
          v(r, p) = vrp - s * (vrq + tau * vrp);
          v(r, q) = vrq + s * (vrp - tau * vrq);
        }
      }
    }
    ++sweep;
  }
  if (off_diagonal_norm(a) > threshold) {
    throw Error("symmetric_eigen: no convergence after 100 sweeps");
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&a](Eigen::Index x, Eigen::Index y) { return a(x, x) < a(y, y); });

  EigenResult result;
  result.eigenvalues.resize(n);
  result.eigenvectors.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Index src = order[static_cast<std::size_t>(i)];
    result.eigenvalues(i) = a(src, src);
    Eigen::VectorXd column = v.col(src);
    Eigen::Index largest = 0;
    column.cwiseAbs().maxCoeff(&largest);
    if (column(largest) < 0.0) column = -column;
    result.eigenvectors.col(i) = column;
  }
  return result;
}

}  // namespace uescore::numerics
