#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace pcseg {

/// Counter-based generator: output i of stream (seed, stream) is the SplitMix64
/// finalizer applied to a key derived from (seed, stream) plus i times the golden
/// gamma. Any (seed, stream, counter) triple can be evaluated independently, so
/// per-frame streams reproduce regardless of generation order.
class CounterRng {
public:
  static constexpr const char *algorithm = "splitmix64-counter";

  CounterRng(std::uint64_t seed, std::uint64_t stream)
    : key_(mix(seed ^ mix(stream + 0x632BE59BD9B4E019ULL))) {}

  std::uint64_t next() { return mix(key_ + (counter_++) * kGamma); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller; consumes two draws per call.
  double normal() {
    const double u1 = 1.0 - uniform(); // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  std::uint64_t counter() const { return counter_; }

private:
  static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;
  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

} // namespace pcseg
