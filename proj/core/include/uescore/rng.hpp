#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

namespace uescore {

/// Seeded generator with platform-stable derived draws.
///
/// std::mt19937_64 output is fixed by the standard; the uniform/normal/shuffle
/// transforms below are implemented by hand so that a given seed produces the
/// same sequence on every platform (the std distributions do not guarantee
/// that).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Unbiased integer in [0, bound) via rejection sampling. bound must be >= 1.
  std::uint64_t bounded(std::uint64_t bound) {
    const std::uint64_t residue =
        (std::numeric_limits<std::uint64_t>::max() % bound + 1) % bound;
    std::uint64_t r = next_u64();
    if (residue != 0) {
      const std::uint64_t limit =
          std::numeric_limits<std::uint64_t>::max() - residue;
      while (r > limit) r = next_u64();
    }
    return r % bound;
  }

  /// Standard normal via Box-Muller (second value cached).
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * 3.14159265358979323846 * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  /// Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::vector<T>& values) {
    if (values.size() < 2) return;
    for (std::size_t i = values.size() - 1; i > 0; --i) {
      const std::size_t j = static_cast<std::size_t>(bounded(i + 1));
      using std::swap;
      swap(values[i], values[j]);
    }
  }

 private:
  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// FNV-1a 64-bit hash; used for the hashed vocabulary and file checksums.
inline std::uint64_t fnv1a64(const void* data, std::size_t len,
                             std::uint64_t state = 0xcbf29ce484222325ull) {
  const auto* bytes = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < len; ++i) {
    state ^= bytes[i];
    state *= 0x100000001b3ull;
  }
  return state;
}

}  // namespace uescore
