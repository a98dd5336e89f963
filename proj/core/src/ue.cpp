#include "uescore/ue.hpp"

#include <algorithm>
#include <cmath>

#include "uescore/errors.hpp"
#include "uescore/numerics.hpp"

namespace uescore::ue {
namespace {

constexpr double kProbFloor = 1e-300;

double clamped_log(double value) { return std::log(std::max(value, kProbFloor)); }

}  // namespace

void Clustering::validate(std::size_t expected_total) const {
  if (clusters.empty()) throw Error("clustering: at least one cluster required");
  std::vector<bool> seen(expected_total, false);
  std::size_t total = 0;
  for (const auto& cluster : clusters) {
    if (cluster.empty()) throw Error("clustering: empty cluster");
    for (std::size_t index : cluster) {
      if (index >= expected_total || seen[index]) {
        throw Error("clustering: indices must be disjoint and within range");
      }
      seen[index] = true;
      ++total;
    }
  }
  if (total != expected_total) throw Error("clustering: does not cover all generations");
}

SimilarityMatrix::SimilarityMatrix(Eigen::MatrixXd entries)
    : entries_(std::move(entries)) {
  const Eigen::Index n = entries_.rows();
  if (n == 0 || entries_.cols() != n) {
    throw Error("similarity matrix must be square and non-empty");
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    if (entries_(i, i) != 1.0) throw Error("similarity matrix diagonal must be 1");
    for (Eigen::Index j = 0; j < n; ++j) {
      const double w = entries_(i, j);
      if (!(w >= 0.0 && w <= 1.0)) throw Error("similarity entries must lie in [0, 1]");
      if (std::abs(w - entries_(j, i)) > 1e-9) {
        throw Error("similarity matrix must be symmetric within 1e-9");
      }
    }
  }
}

std::string method_name(Method method) {
  switch (method) {
    case Method::kConfidence: return "confidence";
    case Method::kEntropy: return "entropy";
    case Method::kSemanticEntropy: return "semantic_entropy";
    case Method::kSentSar: return "sentsar";
    case Method::kLexicalSimilarity: return "lexical_similarity";
    case Method::kNumSemanticGroups: return "num_semantic_groups";
    case Method::kDegreeMatrix: return "degree_matrix";
    case Method::kEccentricity: return "eccentricity";
  }
  throw Error("unknown UE method");
}

std::vector<std::size_t> selected_indices(const QuestionSample& sample,
                                          bool include_most_likely) {
  std::vector<std::size_t> indices;
  for (std::size_t i = 0; i < sample.generations.size(); ++i) {
    if (include_most_likely || !sample.generations[i].is_most_likely) {
      indices.push_back(i);
    }
  }
  return indices;
}

UEScore confidence(const QuestionSample& sample, const scoring::Scorer& scorer) {
  const auto& top = sample.most_likely();
  return UEScore{-scorer(sample.question, top).value, Method::kConfidence};
}

UEScore entropy(const QuestionSample& sample, const scoring::Scorer& scorer,
                bool include_most_likely) {
  const auto indices = selected_indices(sample, include_most_likely);
  if (indices.empty()) {
    throw Error("entropy: no generations selected for sample '" + sample.id + "'");
  }
  double sum = 0.0;
  for (std::size_t index : indices) {
    sum += scorer(sample.question, sample.generations[index]).log_value;
  }
  return UEScore{-sum / static_cast<double>(indices.size()), Method::kEntropy};
}

Clustering cluster_semantically(const QuestionSample& sample,
                                const oracles::EquivalenceFn& equivalent,
                                const std::vector<std::size_t>& indices) {
  if (indices.empty()) throw Error("cluster_semantically: no generations");
  Clustering clustering;
  for (std::size_t index : indices) {
    const std::string& text = sample.generations[index].text;
    bool placed = false;
    for (auto& cluster : clustering.clusters) {
      const std::string& representative = sample.generations[cluster.front()].text;
      if (equivalent(representative, text) && equivalent(text, representative)) {
        cluster.push_back(index);
        placed = true;
        break;
      }
    }
    if (!placed) clustering.clusters.push_back({index});
  }
  return clustering;
}

Clustering cluster_semantically(const QuestionSample& sample,
                                const oracles::EquivalenceFn& equivalent) {
  std::vector<std::size_t> all(sample.generations.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return cluster_semantically(sample, equivalent, all);
}

UEScore semantic_entropy(const QuestionSample& sample,
                         const scoring::Scorer& scorer,
                         const Clustering& clustering) {
  if (clustering.clusters.empty()) throw Error("semantic_entropy: empty clustering");
  double sum = 0.0;
  for (const auto& cluster : clustering.clusters) {
    double cluster_prob = 0.0;
    for (std::size_t index : cluster) {
      if (index >= sample.generations.size()) {
        throw Error("semantic_entropy: clustering index out of range");
      }
      cluster_prob += scorer(sample.question, sample.generations[index]).value;
    }
    sum += clamped_log(cluster_prob);
  }
  return UEScore{-sum / static_cast<double>(clustering.group_count()),
                 Method::kSemanticEntropy};
}

UEScore sentsar(const QuestionSample& sample, const scoring::Scorer& scorer,
                const scoring::SimilarityFn& sim, double temperature) {
  if (!(temperature > 0.0)) throw Error("sentsar: temperature must be positive");
  const std::size_t count = sample.generations.size();
  if (count == 0) throw Error("sentsar: no generations");

  std::vector<double> scores(count);
  for (std::size_t b = 0; b < count; ++b) {
    scores[b] = scorer(sample.question, sample.generations[b]).value;
  }

  double sum = 0.0;
  for (std::size_t b = 0; b < count; ++b) {
    double enhanced = scores[b];
    for (std::size_t j = 0; j < count; ++j) {
      if (j == b) continue;
      enhanced += sim(sample.generations[b].text, sample.generations[j].text) *
                  scores[j] / temperature;
    }
    sum += clamped_log(enhanced);
  }
  return UEScore{-sum / static_cast<double>(count), Method::kSentSar};
}

UEScore lexical_similarity(const QuestionSample& sample) {
  const std::size_t count = sample.generations.size();
  if (count < 2) {
    throw Error("lexical_similarity: needs at least 2 generations, sample '" +
                sample.id + "' has " + std::to_string(count));
  }
  double sum = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < count; ++i) {
    for (std::size_t j = i + 1; j < count; ++j) {
      sum += numerics::rouge_l_f(sample.generations[i].text,
                                 sample.generations[j].text);
      ++pairs;
    }
  }
  return UEScore{-sum / static_cast<double>(pairs), Method::kLexicalSimilarity};
}

UEScore num_semantic_groups(const Clustering& clustering) {
  return UEScore{static_cast<double>(clustering.group_count()),
                 Method::kNumSemanticGroups};
}

UEScore degree_uncertainty(const SimilarityMatrix& similarity) {
  const Eigen::Index n = similarity.size();
  const Eigen::VectorXd degrees = similarity.entries().rowwise().sum();
  double sum = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    sum += static_cast<double>(n) - degrees(i);
  }
  return UEScore{sum / static_cast<double>(n * n), Method::kDegreeMatrix};
}

UEScore eccentricity_uncertainty(const SimilarityMatrix& similarity,
                                 int num_eigvecs) {
  const Eigen::Index n = similarity.size();
  if (num_eigvecs < 1 || num_eigvecs > n) {
    throw Error("eccentricity: num_eigvecs must lie in [1, B]");
  }

  const Eigen::VectorXd degrees = similarity.entries().rowwise().sum();
  Eigen::VectorXd inv_sqrt(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    inv_sqrt(i) = degrees(i) > 0.0 ? 1.0 / std::sqrt(degrees(i)) : 0.0;
  }
  const Eigen::MatrixXd laplacian =
      Eigen::MatrixXd::Identity(n, n) -
      inv_sqrt.asDiagonal() * similarity.entries() * inv_sqrt.asDiagonal();

  const auto eigen = numerics::symmetric_eigen(laplacian);
  const Eigen::MatrixXd embedding = eigen.eigenvectors.leftCols(num_eigvecs);
  const Eigen::RowVectorXd mean = embedding.colwise().mean();
  return UEScore{(embedding.rowwise() - mean).norm(), Method::kEccentricity};
}

SimilarityMatrix similarity_matrix(const QuestionSample& sample,
                                   const scoring::SimilarityFn& sim) {
  const auto n = static_cast<Eigen::Index>(sample.generations.size());
  Eigen::MatrixXd entries = Eigen::MatrixXd::Identity(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double w =
          std::clamp(sim(sample.generations[static_cast<std::size_t>(i)].text,
                         sample.generations[static_cast<std::size_t>(j)].text),
                     0.0, 1.0);
      entries(i, j) = w;
      entries(j, i) = w;
    }
  }
  return SimilarityMatrix(std::move(entries));
}

}  // namespace uescore::ue
