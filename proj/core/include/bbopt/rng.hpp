#pragma once

#include <cstdint>
#include <random>

namespace bbopt {

/// Seeded random stream with platform-independent draws (the standard
/// distributions are implementation-defined, so uniforms are built directly
/// from mt19937_64 output).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  /// Uniform on [0, 1).
  double uniform() { return (gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  std::uint64_t next() { return gen_(); }

 private:
  std::mt19937_64 gen_;
};

}  // namespace bbopt
