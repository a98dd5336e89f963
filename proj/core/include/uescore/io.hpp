#pragma once

#include <cstddef>
#include <filesystem>
#include <vector>

#include "uescore/types.hpp"

namespace uescore {

struct LoadResult {
  std::vector<QuestionSample> samples;
  std::size_t skipped_lines = 0;  // only populated in lenient mode
};

/// Reads one QuestionSample JSON object per line (UTF-8, LF).
///
/// strict mode: any malformed line or invariant violation aborts with the
/// 1-based line number. Lenient mode: offending lines are skipped and counted.
/// Token logprobs are floored at min_log_prob() on load.
LoadResult load_samples(const std::filesystem::path& path, bool strict);

/// Writes samples in the same JSONL schema load_samples reads; `label` is
/// omitted when unknown. Reloading yields structurally equal samples.
void save_samples(const std::filesystem::path& path,
                  const std::vector<QuestionSample>& samples);

/// Calibration-example JSONL: {"question", "tokens", "logprobs", "label"}.
std::vector<CalibrationExample> load_calibration(const std::filesystem::path& path);
void save_calibration(const std::filesystem::path& path,
                      const std::vector<CalibrationExample>& examples);

}  // namespace uescore
