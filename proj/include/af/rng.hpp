#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>

namespace af {

// Seeded, portable random streams. The generator is xoshiro256** seeded
// through the splitmix64 finalizer, both with fixed published semantics,
// so bundles regenerate identically on any platform. Distribution
// transforms (uniform, Box-Muller normal, inversion Poisson) are defined
// here rather than taken from <random>, whose distributions are not
// portable across standard libraries.

inline std::uint64_t splitmix64_next(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// FNV-1a over a string; used to derive stream tags from names.
inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

class Rng {
 public:
  static constexpr const char* kAlgorithm = "xoshiro256** (seeded via splitmix64)";

  explicit Rng(std::uint64_t seed) {
    std::uint64_t sm = seed;
    for (auto& word : state_) word = splitmix64_next(sm);
  }

  /// Independent substream for (seed, tag, index); parallel generation
  /// draws from per-item substreams so thread count never changes output.
  static Rng substream(std::uint64_t seed, std::string_view tag, std::uint64_t index) {
    std::uint64_t sm = seed;
    std::uint64_t mixed = splitmix64_next(sm) ^ fnv1a64(tag);
    mixed = splitmix64_next(mixed);
    mixed ^= 0x9E3779B97F4A7C15ULL * (index + 1);
    return Rng(splitmix64_next(mixed));
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  /// Uniform double in [0, 1) with 53 bits of mantissa.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n); n must be > 0.
  std::uint64_t uniform_index(std::uint64_t n) { return next_u64() % n; }

  int uniform_int(int lo, int hi) {  // inclusive bounds
    return lo + static_cast<int>(uniform_index(static_cast<std::uint64_t>(hi - lo + 1)));
  }

  /// Box-Muller transform; consumes two uniforms per call.
  double normal(double mean, double stddev) {
    double u1 = uniform();
    if (u1 < 1e-300) u1 = 1e-300;
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    return mean + stddev * r * std::cos(6.283185307179586476925286766559 * u2);
  }

  /// Inversion by sequential search; intended for small lambda.
  int poisson(double lambda) {
    if (lambda <= 0.0) return 0;
    const double u = uniform();
    double p = std::exp(-lambda);
    double cdf = p;
    int k = 0;
    while (u > cdf && k < 10000) {
      ++k;
      p *= lambda / k;
      cdf += p;
    }
    return k;
  }

  double log_uniform(double lo, double hi) {
    return std::exp(uniform(std::log(lo), std::log(hi)));
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  std::uint64_t state_[4] = {};
};

}  // namespace af
