#pragma once

#include <cstdint>
#include <random>

namespace forceinfer {

// Seeded generator whose draws are identical on every platform: only the raw
// mt19937_64 output is used, never the implementation-defined std::*_distribution.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform in [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n);

  // Standard normal by Box-Muller; both variates of a pair are consumed so the
  // stream position depends only on the number of calls.
  double normal(double mean, double stddev);

  std::uint64_t poisson(double mean);

  bool bernoulli(double p) { return uniform01() < p; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace forceinfer
