#pragma once

#include <cstdint>
#include <random>

namespace iva {

/// Deterministic RNG helpers. All randomized checkers and Monte Carlo loops
/// draw through these so that reports are reproducible bit-for-bit from the
/// seed alone. Substreams let trials run in parallel with a fixed reduction
/// order: substream(seed, k) is independent of how work is partitioned.

inline uint64_t splitmix64(uint64_t& state) {
  uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

class Rng {
 public:
  explicit Rng(uint64_t seed) {
    uint64_t s = seed;
    state_ = std::mt19937_64(splitmix64(s));
  }

  static Rng substream(uint64_t seed, uint64_t index) {
    uint64_t s = seed;
    uint64_t a = splitmix64(s);
    uint64_t mix = a ^ (index * 0xd1342543de82ef95ULL + 0x2545f4914f6cdd1dULL);
    return Rng(mix);
  }

  uint64_t bits() { return state_(); }

  /// Uniform in [0, 1). Derived from the top 53 bits so the value does not
  /// depend on the standard library's distribution implementation.
  double u01() { return static_cast<double>(bits() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * u01(); }

  /// Uniform integer in [0, n), n >= 1.
  int below(int n) { return static_cast<int>(bits() % static_cast<uint64_t>(n)); }

  bool bernoulli(double p) { return u01() < p; }

  double exponential(double rate = 1.0) {
    double u = u01();
    if (u >= 1.0) u = 0.9999999999999999;
    return -std::log1p(-u) / rate;
  }

 private:
  explicit Rng(uint64_t raw, int) : state_(raw) {}
  std::mt19937_64 state_;
};

}  // namespace iva
