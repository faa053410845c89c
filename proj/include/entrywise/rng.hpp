#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace entrywise {

/// Seeded random stream for one sampled matrix.
///
/// Uniforms are built from the top 53 bits of std::mt19937_64 and normals from
/// Box-Muller, so the bit pattern of every draw is fixed by the standard and
/// does not depend on the standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  bool bernoulli(double p) { return uniform() < p; }

  double normal() {
    if (hasSpare_) {
      hasSpare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    hasSpare_ = true;
    return radius * std::cos(angle);
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool hasSpare_ = false;
};

/// Seed for replicate r of an experiment.
inline std::uint64_t replicate_seed(std::uint64_t baseSeed, std::uint64_t replicate) {
  return baseSeed + replicate;
}

}  // namespace entrywise
