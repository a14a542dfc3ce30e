#pragma once

#include <cmath>
#include <cstdint>
#include <limits>

namespace twinsipm {

// SplitMix64 finalizer (Vigna). Good 64-bit mixing for seed expansion.
inline std::uint64_t hash64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : s_(seed) {}
  std::uint64_t next() {
    s_ += 0x9E3779B97F4A7C15ULL;
    return hash64(s_);
  }

 private:
  std::uint64_t s_;
};

// Stream domains. Every consumer of randomness gets its own domain so that
// adding draws in one place never shifts the draws seen by another.
namespace stream_domain {
inline constexpr std::uint64_t kShots = 1;
inline constexpr std::uint64_t kBootstrapJoint = 2;
inline constexpr std::uint64_t kBootstrapArm1 = 3;
inline constexpr std::uint64_t kBootstrapArm2 = 4;
inline constexpr std::uint64_t kBootstrapConditional = 5;
inline constexpr std::uint64_t kNoise = 6;
}  // namespace stream_domain

// xoshiro256++ (Blackman/Vigna). One independently seeded instance per
// (seed, domain, stream) triple; shot i always uses stream i, so results do
// not depend on how work is split across threads.
class Rng {
 public:
  Rng(std::uint64_t seed, std::uint64_t domain, std::uint64_t stream) {
    std::uint64_t h = hash64(seed + 0x9E3779B97F4A7C15ULL);
    h = hash64(h ^ (domain + 0xBF58476D1CE4E5B9ULL));
    h = hash64(h ^ (stream + 0x94D049BB133111EBULL));
    SplitMix64 sm(h);
    for (auto& w : s_) w = sm.next();
    if ((s_[0] | s_[1] | s_[2] | s_[3]) == 0) s_[0] = 1;
  }

  std::uint64_t next() {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Uniform double in [0, 1), 53 random bits.
  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
  std::uint64_t s_[4];
};

// Geometric on {0,1,2,...} with the given mean, by CDF inversion.
inline std::uint64_t sample_geometric(Rng& rng, double mean) {
  if (mean <= 0.0) return 0;
  const double q = mean / (1.0 + mean);
  const double u = rng.uniform01();
  if (1.0 - u > q) return 0;
  const double n = std::floor(std::log(1.0 - u) / std::log(q));
  if (!(n >= 0.0)) return 0;
  if (n >= static_cast<double>(std::numeric_limits<std::uint64_t>::max())) {
    return std::numeric_limits<std::uint64_t>::max();
  }
  return static_cast<std::uint64_t>(n);
}

namespace detail {

// Hoermann's PTRS transformed-rejection Poisson sampler, for mean >= 10.
inline std::uint64_t sample_poisson_ptrs(Rng& rng, double mean) {
  const double slam = std::sqrt(mean);
  const double llam = std::log(mean);
  const double b = 0.931 + 2.53 * slam;
  const double a = -0.059 + 0.02483 * b;
  const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
  const double v_r = 0.9277 - 3.6224 / (b - 2.0);
  for (;;) {
    const double u = rng.uniform01() - 0.5;
    const double v = rng.uniform01();
    const double us = 0.5 - std::fabs(u);
    const double kd = std::floor((2.0 * a / us + b) * u + mean + 0.43);
    if (us >= 0.07 && v <= v_r) return static_cast<std::uint64_t>(kd);
    if (kd < 0.0 || (us < 0.013 && v > us)) continue;
    if (std::log(v) + std::log(inv_alpha) - std::log(a / (us * us) + b) <=
        kd * llam - mean - std::lgamma(kd + 1.0)) {
      return static_cast<std::uint64_t>(kd);
    }
  }
}

}  // namespace detail

inline std::uint64_t sample_poisson(Rng& rng, double mean) {
  if (mean <= 0.0) return 0;
  if (mean < 10.0) {
    // Knuth's product-of-uniforms method.
    const double limit = std::exp(-mean);
    std::uint64_t k = 0;
    double p = 1.0;
    do {
      ++k;
      p *= rng.uniform01();
    } while (p > limit);
    return k - 1;
  }
  return detail::sample_poisson_ptrs(rng, mean);
}

inline std::uint64_t sample_binomial(Rng& rng, std::uint64_t n, double p) {
  if (p <= 0.0 || n == 0) return 0;
  if (p >= 1.0) return n;
  std::uint64_t k = 0;
  for (std::uint64_t i = 0; i < n; ++i) {
    if (rng.uniform01() < p) ++k;
  }
  return k;
}

// Standard normal via Box-Muller. Consumes two uniforms per call.
inline double sample_normal(Rng& rng) {
  double u1 = rng.uniform01();
  if (u1 <= 0.0) u1 = 0x1.0p-53;
  const double u2 = rng.uniform01();
  constexpr double kTwoPi = 6.283185307179586476925286766559;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
}

}  // namespace twinsipm
