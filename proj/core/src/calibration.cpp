#include "uescore/calibration.hpp"

#include <cmath>
#include <string>
#include <unordered_set>

#include "uescore/errors.hpp"
#include "uescore/rng.hpp"

namespace uescore {
namespace {

std::string trimmed(const std::string& s) {
  std::size_t begin = 0, end = s.size();
  while (begin < end && std::isspace(static_cast<unsigned char>(s[begin]))) ++begin;
  while (end > begin && std::isspace(static_cast<unsigned char>(s[end - 1]))) --end;
  return s.substr(begin, end - begin);
}

}  // namespace

std::vector<CalibrationExample> build_calibration_set(
    const std::vector<QuestionSample>& samples, bool dedup) {
  std::vector<CalibrationExample> examples;
  std::unordered_set<std::string> seen;
  for (const auto& sample : samples) {
    for (const auto& gen : sample.generations) {
      if (!gen.label) {
        throw Error("sample '" + sample.id + "': generation \"" + gen.text +
                    "\" has no correctness label");
      }
      if (dedup) {
        // Key separator \x1f cannot occur in trimmed JSON string content.
        const std::string key = trimmed(sample.question) + '\x1f' + trimmed(gen.text);
        if (!seen.insert(key).second) continue;
      }
      examples.push_back(CalibrationExample{sample.question, gen.trace, *gen.label});
    }
  }
  return examples;
}

CalibrationSplit split_calibration(std::vector<CalibrationExample> examples,
                                   double holdout_fraction, std::uint64_t seed) {
  if (!(holdout_fraction >= 0.0 && holdout_fraction < 1.0)) {
    throw Error("split_calibration: holdout_fraction must lie in [0, 1)");
  }
  Rng rng(seed);
  rng.shuffle(examples);
  const auto holdout_count = static_cast<std::size_t>(
      std::floor(holdout_fraction * static_cast<double>(examples.size())));

  CalibrationSplit split;
  split.holdout.assign(examples.begin(),
                       examples.begin() + static_cast<std::ptrdiff_t>(holdout_count));
  split.train.assign(examples.begin() + static_cast<std::ptrdiff_t>(holdout_count),
                     examples.end());
  return split;
}

}  // namespace uescore
