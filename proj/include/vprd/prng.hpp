#pragma once

// Fixed pseudo-random number generator used everywhere randomness is needed
// (dataset splitting, weight init, dropout masks, synthetic data). The
// algorithm is pinned so that a given seed produces the same stream on every
// platform:
//
//   state      xoshiro256++ (Blackman & Vigna), 4 x 64-bit words
//   seeding    splitmix64 expansion of a single 64-bit seed
//   uniform    53-bit mantissa draw, (next() >> 11) * 2^-53, in [0, 1)
//   bounded    rejection sampling, no modulo bias
//   normal     Box-Muller on two fresh uniforms (cosine branch, no caching)
//
// Independent sub-streams are derived with derive_seed(seed, stream); each
// consumer of randomness owns its own stream so call order in one module
// cannot perturb another.

#include <cstdint>
#include <cmath>
#include <numbers>

namespace vprd {

namespace detail {
inline constexpr std::uint64_t kSplitmixGamma = 0x9E3779B97F4A7C15ULL;

inline constexpr std::uint64_t splitmix64_mix(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline constexpr std::uint64_t rotl(std::uint64_t x, int k) {
  return (x << k) | (x >> (64 - k));
}
}  // namespace detail

/// Deterministically maps (seed, stream id) to a fresh seed.
inline constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  return detail::splitmix64_mix(seed + detail::kSplitmixGamma * (stream + 1));
}

/// Stream ids for the PRNG consumers. Each module draws from its own stream.
enum class RngStream : std::uint64_t {
  kSplitShuffle = 1,
  kWeightInit = 2,
  kDropout = 3,
  kSynthModel = 4,
  kSynthSampleBase = 1000,     // + sample index
  kSynthJitterBase = 2000000,  // + shot index
};

inline constexpr std::uint64_t derive_seed(std::uint64_t seed, RngStream stream,
                                           std::uint64_t offset = 0) {
  return derive_seed(seed, static_cast<std::uint64_t>(stream) + offset);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    std::uint64_t x = seed;
    for (auto& w : state_) {
      x += detail::kSplitmixGamma;
      w = detail::splitmix64_mix(x);
    }
    if ((state_[0] | state_[1] | state_[2] | state_[3]) == 0) state_[0] = 1;
  }

  std::uint64_t next() {
    const std::uint64_t result = detail::rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = detail::rotl(state_[3], 45);
    return result;
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double next_double() {
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
  }

  /// Uniform integer in [0, bound), bound > 0. Rejection sampling keeps the
  /// draw unbiased for every bound.
  std::uint64_t next_below(std::uint64_t bound) {
    const std::uint64_t threshold = (0 - bound) % bound;  // 2^64 mod bound
    for (;;) {
      const std::uint64_t x = next();
      if (x >= threshold) return x % bound;
    }
  }

  /// Uniform double in [lo, hi).
  double next_uniform(double lo, double hi) {
    return lo + (hi - lo) * next_double();
  }

  /// Standard normal draw, Box-Muller cosine branch. Consumes exactly two
  /// uniforms per call; nothing is cached so streams stay reproducible.
  double next_normal() {
    const double u1 = 1.0 - next_double();  // (0, 1], keeps log finite
    const double u2 = next_double();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::uint64_t state_[4];
};

}  // namespace vprd
