#pragma once

#include <cstdint>
#include <random>

#include "visyreve/geometry.hpp"

namespace visyreve {

/// Seeded generator with a platform-independent uniform draw, so that seeded
/// outputs are reproducible across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, n).
  std::uint64_t index(std::uint64_t n) { return static_cast<std::uint64_t>(uniform() * n); }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

/// Uniformly distributed rotation (Haar measure on SO(3)) from three uniform
/// variates via the subgroup algorithm.
Quaternion uniform_rotation(Rng& rng);

}  // namespace visyreve
