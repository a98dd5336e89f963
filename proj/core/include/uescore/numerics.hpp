#pragma once

#include <Eigen/Dense>
#include <string_view>
#include <vector>

namespace uescore::numerics {

/// Sentence-level Rouge-L F-measure on whitespace tokens.
///
/// No stemming or stopword removal. With LCS length l and token counts
/// |a|, |b|, the balanced F-score reduces to 2*l / (|a| + |b|). Both empty
/// scores 1, an LCS of zero scores 0.
double rouge_l_f(std::string_view a, std::string_view b);

/// Linear-interpolation empirical quantile (index h = q * (n - 1)).
/// Throws Error on an empty sample; q must lie in [0, 1].
double quantile(std::vector<double> values, double q);

struct EigenResult {
  Eigen::VectorXd eigenvalues;   // ascending
  Eigen::MatrixXd eigenvectors;  // orthonormal columns, column i pairs with eigenvalue i
};

/// Cyclic Jacobi eigendecomposition for small symmetric matrices (n <= 64).
///
/// Sweeps until the off-diagonal Frobenius norm drops below 1e-12 * ||A||_F,
/// up to 100 sweeps (Error on non-convergence). Input symmetry is checked to
/// 1e-9. Eigenpairs are sorted ascending and each eigenvector is oriented so
/// its largest-magnitude component is positive.
EigenResult symmetric_eigen(const Eigen::MatrixXd& matrix);

}  // namespace uescore::numerics
