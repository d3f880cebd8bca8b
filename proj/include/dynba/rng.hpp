#pragma once

#include <cstdint>

namespace dynba {

/// SplitMix64 used in counter mode: draw n of a stream is mix(key + (n + 1) * golden).
/// Streams are derived by hashing tags into the key, so any draw can be reproduced
/// independently of generation order. Gaussians use Box-Muller on draws (2n, 2n + 1),
/// taking the cosine branch only.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed);

  /// Independent stream derived from this one and up to three tags.
  CounterRng stream(std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0) const;

  std::uint64_t bits(std::uint64_t counter) const;
  /// Uniform in [0, 1) with 53 bits of resolution.
  double uniform(std::uint64_t counter) const;
  double uniform(std::uint64_t counter, double lo, double hi) const { return lo + (hi - lo) * uniform(counter); }
  /// Standard normal draw number `index`.
  double normal(std::uint64_t index) const;

  std::uint64_t key() const { return key_; }

 private:
  std::uint64_t key_;
};

std::uint64_t splitmix64_mix(std::uint64_t z);

}  // namespace dynba
