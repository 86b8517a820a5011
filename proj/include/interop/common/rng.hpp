#pragma once

#include <cstdint>
#include <random>

namespace interop {

/// The single seeded generator of a simulation. Every stochastic decision
/// (broker faults, forged payloads, scenario sampling) draws from it, in the
/// order the tick loop visits components, so runs replay bit-for-bit.
///
/// Doubles are derived from the raw 64-bit output rather than through
/// std::uniform_real_distribution, whose algorithm is implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n) { return engine_() % n; }

  /// True with probability p. Always draws, so the draw count never depends on p.
  bool chance(double p) { return uniform() < p; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace interop
