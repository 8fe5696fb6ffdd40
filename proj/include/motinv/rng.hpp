#pragma once

#include <cstdint>
#include <random>

namespace motinv {

// Platform-independent uniform generator: std::mt19937_64 (whose output
// sequence is fixed by the standard) mapped to doubles with the top 53 bits.
// std::uniform_real_distribution is avoided because its algorithm is
// implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform on [0, 1).
  double unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  // Uniform on [lo, hi].
  double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }
  std::uint64_t bits() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace motinv
