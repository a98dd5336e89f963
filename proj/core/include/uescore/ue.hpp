#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "uescore/oracles.hpp"
#include "uescore/scoring.hpp"
#include "uescore/types.hpp"

namespace uescore::ue {

/// Partition of generation indices into meaning-equivalence groups.
struct Clustering {
  std::vector<std::vector<std::size_t>> clusters;  // disjoint, non-empty, covering

  std::size_t group_count() const { return clusters.size(); }
  void validate(std::size_t expected_total) const;
};

/// Pairwise generation similarity: symmetric, unit diagonal, entries in [0, 1].
class SimilarityMatrix {
 public:
  explicit SimilarityMatrix(Eigen::MatrixXd entries);  // validates

  const Eigen::MatrixXd& entries() const { return entries_; }
  Eigen::Index size() const { return entries_.rows(); }

 private:
  Eigen::MatrixXd entries_;
};

enum class Method {
  kConfidence,
  kEntropy,
  kSemanticEntropy,
  kSentSar,
  kLexicalSimilarity,
  kNumSemanticGroups,
  kDegreeMatrix,
  kEccentricity,
};

std::string method_name(Method method);

/// Uncertainty value; larger always means more uncertain.
struct UEScore {
  double value = 0.0;
  Method method = Method::kConfidence;
};

/// Negative score of the most-likely generation.
UEScore confidence(const QuestionSample& sample, const scoring::Scorer& scorer);

/// Monte Carlo entropy: mean negative log score over the selected generations.
/// include_most_likely controls whether the most-likely generation counts as
/// one of the samples; an empty selection is an error.
UEScore entropy(const QuestionSample& sample, const scoring::Scorer& scorer,
                bool include_most_likely);

/// Deterministic greedy clustering. Generations are scanned in index order and
/// joined to the first cluster whose representative (lowest-index member) is
/// equivalent in both directions; otherwise a new cluster opens.
Clustering cluster_semantically(const QuestionSample& sample,
                                const oracles::EquivalenceFn& equivalent);
/// Same scan restricted to the given generation indices.
Clustering cluster_semantically(const QuestionSample& sample,
                                const oracles::EquivalenceFn& equivalent,
                                const std::vector<std::size_t>& indices);

/// Entropy over cluster probabilities: P(c) sums member scores (no
/// renormalization, clamped at 1e-300), value = -(1/|C|) * sum ln P(c).
UEScore semantic_entropy(const QuestionSample& sample,
                         const scoring::Scorer& scorer,
                         const Clustering& clustering);

/// Similarity-enhanced entropy. Each generation's score is boosted by
/// neighbour scores weighted by text similarity over the temperature, then
/// the mean negative log of the (possibly > 1) enhanced scores is taken.
UEScore sentsar(const QuestionSample& sample, const scoring::Scorer& scorer,
                const scoring::SimilarityFn& sim, double temperature);

/// Negative mean Rouge-L F over unordered generation pairs; needs >= 2.
UEScore lexical_similarity(const QuestionSample& sample);

UEScore num_semantic_groups(const Clustering& clustering);

/// sum_i (B - d_i) / B^2 with d_i the similarity row sums; 0 iff all pairs
/// fully similar.
UEScore degree_uncertainty(const SimilarityMatrix& similarity);

/// Dispersion of spectral embeddings from the normalized Laplacian
/// I - D^{-1/2} W D^{-1/2}: generations embed as their coordinates across the
/// num_eigvecs smallest-eigenvalue eigenvectors, and the value is the
/// Euclidean norm of the mean-centered embedding stack.
UEScore eccentricity_uncertainty(const SimilarityMatrix& similarity,
                                 int num_eigvecs);

/// Convenience: fill a SimilarityMatrix from generation texts and an oracle.
SimilarityMatrix similarity_matrix(const QuestionSample& sample,
                                   const scoring::SimilarityFn& sim);

/// Indices selected by the include_most_likely flag, in ascending order.
std::vector<std::size_t> selected_indices(const QuestionSample& sample,
                                          bool include_most_likely);

}  // namespace uescore::ue
