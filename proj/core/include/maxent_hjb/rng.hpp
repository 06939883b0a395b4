#pragma once

#include <cstdint>
#include <limits>
#include <random>

namespace maxent_hjb {

/// Counter-based 64-bit generator: output i is a bijective mix of (key, i).
/// Any stream position can be reproduced from the seed alone, and two
/// generators with the same seed emit identical sequences.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0)
      : key_(mix(seed ^ (stream * 0xD1B54A32D192ED03ULL))) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() { return mix(key_ + 0x9E3779B97F4A7C15ULL * ++counter_); }

  std::uint64_t counter() const { return counter_; }

 private:
  static constexpr std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// Seeded source of uniform and standard-normal variates.
class RandomSource {
 public:
  explicit RandomSource(std::uint64_t seed, std::uint64_t stream = 0)
      : engine_(seed, stream) {}

  double uniform(double lo = 0.0, double hi = 1.0) {
    return std::uniform_real_distribution<double>(lo, hi)(engine_);
  }
  double normal() { return normal_(engine_); }

  CounterRng& engine() { return engine_; }

 private:
  CounterRng engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace maxent_hjb
