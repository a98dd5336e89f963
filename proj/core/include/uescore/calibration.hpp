#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "uescore/types.hpp"

namespace uescore {

/// Flattens labeled generations into calibration examples, one per
/// (question, answer text) pair in input order.
///
/// With dedup on, later exact duplicates of a (question, answer text) pair are
/// dropped; keys are compared byte-wise after whitespace trimming. Throws
/// Error if any generation lacks a label.
std::vector<CalibrationExample> build_calibration_set(
    const std::vector<QuestionSample>& samples, bool dedup);

struct CalibrationSplit {
  std::vector<CalibrationExample> train;
  std::vector<CalibrationExample> holdout;
};

/// Seeded shuffle followed by a floor(n * holdout_fraction) holdout cut.
/// Identical seed and input produce identical splits.
CalibrationSplit split_calibration(std::vector<CalibrationExample> examples,
                                   double holdout_fraction, std::uint64_t seed);

}  // namespace uescore
