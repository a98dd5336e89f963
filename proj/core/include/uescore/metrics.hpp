#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "uescore/types.hpp"
#include "uescore/ue.hpp"

namespace uescore::metrics {

/// Per-method evaluation of uncertainty scores against correctness labels.
/// A metric that cannot be computed for the given labels (single class, no
/// errors) is left empty rather than failing the whole report.
struct EvalReport {
  std::string method;
  std::optional<double> auroc;
  std::optional<double> prr;
  std::size_t n = 0;
  std::size_t positives = 0;  // count of correct labels
};

/// Probability that a random (incorrect, correct) pair ranks the incorrect
/// item as more uncertain, ties counted 1/2. Rank-based with integer
/// accumulation, so it matches O(n^2) pair counting bit for bit. Labels are
/// 1 = correct, 0 = incorrect; both classes must be present.
double auroc(const std::vector<double>& uncertainties,
             const std::vector<int>& labels);

/// Prediction Rejection Ratio.
///
/// The rejection curve R(j) is the error rate of the n-j items left after
/// discarding the j most-uncertain ones (ties broken by stable input order),
/// on the grid j/n with R(n) = 0. PRR = area(random - method) /
/// area(random - oracle), trapezoid areas against the constant base-error-rate
/// baseline; the oracle discards all errors first. 1 = perfect, ~0 = random,
/// negative = worse than random (reported as-is). Requires at least one error
/// and at least one correct item.
double prr(const std::vector<double>& uncertainties,
           const std::vector<int>& labels);

/// Scores one method over a sample set: labels come from each sample's
/// most-likely generation, predictions from the per-sample UE values.
EvalReport evaluate(const std::vector<QuestionSample>& samples,
                    const std::vector<ue::UEScore>& method_results,
                    const std::string& method);

/// method,auroc,prr,n,positives rows; unavailable metrics serialize as "nan".
/// header_comment lines (if any) are emitted first, prefixed with "# ".
void write_reports_csv(const std::filesystem::path& path,
                       const std::vector<EvalReport>& reports,
                       const std::vector<std::string>& header_comments = {});
void write_reports_json(const std::filesystem::path& path,
                        const std::vector<EvalReport>& reports,
                        const std::vector<std::string>& header_comments = {});

}  // namespace uescore::metrics
