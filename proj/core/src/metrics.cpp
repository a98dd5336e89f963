#include "uescore/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <numeric>

#include <nlohmann/json.hpp>

#include "uescore/errors.hpp"

namespace uescore::metrics {
namespace {

void check_lengths(const std::vector<double>& uncertainties,
                   const std::vector<int>& labels) {
  if (uncertainties.size() != labels.size()) {
    throw Error("metrics: uncertainties and labels differ in length");
  }
  if (uncertainties.empty()) throw Error("metrics: empty input");
  for (int label : labels) {
    if (label != 0 && label != 1) throw Error("metrics: labels must be 0 or 1");
  }
}

}  // namespace

double auroc(const std::vector<double>& uncertainties,
             const std::vector<int>& labels) {
  check_lengths(uncertainties, labels);
  const std::size_t n = labels.size();
  const auto incorrect =
      static_cast<std::uint64_t>(std::count(labels.begin(), labels.end(), 0));
  const std::uint64_t correct = n - incorrect;
  if (incorrect == 0 || correct == 0) {
    throw Error("auroc: both classes must be present");
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return uncertainties[a] < uncertainties[b];
  });

  // Twice the rank sum of the incorrect class, with average ranks for ties;
  // 2 * avg rank of a tie group spanning 1-based ranks [a, b] is a + b, so the
  // accumulation stays in integers and matches brute-force pair counting
  // exactly.
  std::uint64_t doubled_rank_sum = 0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n &&
           uncertainties[order[j + 1]] == uncertainties[order[i]]) {
      ++j;
    }
    const std::uint64_t doubled_avg_rank =
        static_cast<std::uint64_t>(i + 1) + static_cast<std::uint64_t>(j + 1);
    for (std::size_t k = i; k <= j; ++k) {
      if (labels[order[k]] == 0) doubled_rank_sum += doubled_avg_rank;
    }
    i = j + 1;
  }

  const std::uint64_t numerator = doubled_rank_sum - incorrect * (incorrect + 1);
  return static_cast<double>(numerator) /
         static_cast<double>(2 * incorrect * correct);
}

namespace {

/// Area between the constant base-error-rate baseline and the rejection curve
/// induced by discarding items in the given order, by trapezoid over j/n.
double rejection_area(const std::vector<std::size_t>& discard_order,
                      const std::vector<int>& labels, double base_error_rate) {
  const std::size_t n = labels.size();
  std::size_t errors_left = 0;
  for (int label : labels) errors_left += (label == 0);

  std::vector<double> curve(n + 1);
  curve[0] = static_cast<double>(errors_left) / static_cast<double>(n);
  for (std::size_t j = 1; j <= n; ++j) {
    errors_left -= (labels[discard_order[j - 1]] == 0);
    curve[j] = j < n ? static_cast<double>(errors_left) /
                           static_cast<double>(n - j)
                     : 0.0;
  }

  double area = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    area += 0.5 * ((base_error_rate - curve[j]) + (base_error_rate - curve[j + 1]));
  }
  return area / static_cast<double>(n);
}

}  // namespace

double prr(const std::vector<double>& uncertainties,
           const std::vector<int>& labels) {
  check_lengths(uncertainties, labels);
  const std::size_t n = labels.size();
  const auto errors =
      static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 0));
  if (errors == 0) throw Error("prr: no errors present (oracle area is zero)");
  if (errors == n) throw Error("prr: all items are errors (oracle area is zero)");
  const double base_error_rate =
      static_cast<double>(errors) / static_cast<double>(n);

  std::vector<std::size_t> method_order(n);
  std::iota(method_order.begin(), method_order.end(), std::size_t{0});
  std::stable_sort(method_order.begin(), method_order.end(),
                   [&](std::size_t a, std::size_t b) {
                     return uncertainties[a] > uncertainties[b];
                   });

  std::vector<std::size_t> oracle_order(n);
  std::iota(oracle_order.begin(), oracle_order.end(), std::size_t{0});
  std::stable_sort(oracle_order.begin(), oracle_order.end(),
                   [&](std::size_t a, std::size_t b) {
                     return labels[a] < labels[b];  // errors first
                   });

  const double method_area = rejection_area(method_order, labels, base_error_rate);
  const double oracle_area = rejection_area(oracle_order, labels, base_error_rate);
  return method_area / oracle_area;
}

EvalReport evaluate(const std::vector<QuestionSample>& samples,
                    const std::vector<ue::UEScore>& method_results,
                    const std::string& method) {
  if (samples.size() != method_results.size()) {
    throw Error("evaluate: one UE score required per sample");
  }
  if (samples.empty()) throw Error("evaluate: empty sample set");

  std::vector<double> uncertainties;
  std::vector<int> labels;
  uncertainties.reserve(samples.size());
  labels.reserve(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& top = samples[i].most_likely();
    if (!top.label) {
      throw Error("evaluate: sample '" + samples[i].id +
                  "' most-likely generation has no label");
    }
    uncertainties.push_back(method_results[i].value);
    labels.push_back(*top.label);
  }

  EvalReport report;
  report.method = method;
  report.n = samples.size();
  report.positives =
      static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
  try {
    report.auroc = auroc(uncertainties, labels);
  } catch (const Error&) {
    report.auroc.reset();
  }
  try {
    report.prr = prr(uncertainties, labels);
  } catch (const Error&) {
    report.prr.reset();
  }
  return report;
}

namespace {

std::string format_metric(const std::optional<double>& value) {
  if (!value) return "nan";
  char buffer[40];
  std::snprintf(buffer, sizeof(buffer), "%.17g", *value);
  return buffer;
}

}  // namespace

void write_reports_csv(const std::filesystem::path& path,
                       const std::vector<EvalReport>& reports,
                       const std::vector<std::string>& header_comments) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  for (const auto& comment : header_comments) out << "# " << comment << '\n';
  out << "method,auroc,prr,n,positives\n";
  for (const auto& report : reports) {
    out << report.method << ',' << format_metric(report.auroc) << ','
        << format_metric(report.prr) << ',' << report.n << ','
        << report.positives << '\n';
  }
  if (!out) throw Error("I/O failure writing " + path.string());
}

void write_reports_json(const std::filesystem::path& path,
                        const std::vector<EvalReport>& reports,
                        const std::vector<std::string>& header_comments) {
  nlohmann::json doc;
  if (!header_comments.empty()) doc["comments"] = header_comments;
  auto& rows = doc["reports"] = nlohmann::json::array();
  for (const auto& report : reports) {
    nlohmann::json row{{"method", report.method},
                       {"n", report.n},
                       {"positives", report.positives}};
    row["auroc"] = report.auroc ? nlohmann::json(*report.auroc) : nlohmann::json();
    row["prr"] = report.prr ? nlohmann::json(*report.prr) : nlohmann::json();
    rows.push_back(std::move(row));
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << doc.dump(2) << '\n';
  if (!out) throw Error("I/O failure writing " + path.string());
}

}  // namespace uescore::metrics
