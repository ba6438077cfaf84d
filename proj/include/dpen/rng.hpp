#pragma once

#include <cstdint>
#include <random>

#include "dpen/types.hpp"

namespace dpen {

/// Seeded generator with a portable uniform mapping (53 random bits per draw),
/// so seeded runs agree across standard-library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  Vector uniform_vector(Index size, double lo, double hi) {
    Vector out(size);
    for (Index k = 0; k < size; ++k) out(k) = uniform(lo, hi);
    return out;
  }

  /// Entries uniform on [0, 1), shifted to [-0.5, 0.5) unless `centered` is false,
  /// then normalized.
  Vector unit_vector(Index size, bool centered = true) {
    Vector out = uniform_vector(size, 0.0, 1.0).array() - (centered ? 0.5 : 0.0);
    const double norm = out.norm();
    return norm > 0 ? Vector(out / norm) : out;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace dpen
