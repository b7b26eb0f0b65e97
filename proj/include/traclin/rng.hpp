#pragma once

#include <cstdint>
#include <limits>
#include <numbers>
#include <random>

#include "traclin/tensor.hpp"

namespace traclin {

/// SplitMix64: 64-bit generator with cheap, deterministic stream splitting.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Independent child stream.
  SplitMix64 split() { return SplitMix64((*this)() ^ 0xD1B54A32D192ED03ULL); }

  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal() {
    // Box–Muller on (0,1] × [0,1).
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }
  Vec3 normal3() { return {normal(), normal(), normal()}; }
  Vec3 unit3() {
    Vec3 v;
    do v = normal3();
    while (norm(v) < 1e-12);
    return (1.0 / norm(v)) * v;
  }

 private:
  std::uint64_t state_;
};

/// Random rotation: uniform axis, uniform angle in [0, π].
inline Mat3 random_rotation(SplitMix64& rng) {
  return exp_skew(AxialVector{rng.unit3()}, rng.uniform(0.0, std::numbers::pi)).matrix();
}

/// n quasi-uniform unit vectors (Fibonacci sphere).
inline Vec3 fibonacci_direction(int i, int n) {
  const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
  const double z = 1.0 - (2.0 * i + 1.0) / n;
  const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
  return {r * std::cos(golden * i), r * std::sin(golden * i), z};
}

}  // namespace traclin
