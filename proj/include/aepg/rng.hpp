#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace aepg {

// Seeded random stream with fully specified output. The engine is
// std::mt19937_64 (bit-stable per the C++ standard); the distributions are
// implemented here instead of <random> because the standard leaves
// normal/uniform-real sampling algorithms implementation-defined.
//
// Independent subsystems (dataset generation, signal supports, SPIDER
// minibatches, initial points) draw from distinct streams derived from one
// user seed and a domain tag, so e.g. changing q/b never perturbs the data.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // 53-bit mantissa uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Standard normal via Box-Muller; one spare value is cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double mag = std::sqrt(-2.0 * std::log(u1));
    const double two_pi = 6.283185307179586476925286766559;
    spare_ = mag * std::sin(two_pi * u2);
    has_spare_ = true;
    return mag * std::cos(two_pi * u2);
  }

  // Uniform integer in [0, n) by rejection (no modulo bias).
  std::uint64_t uniform_index(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x = engine_();
    while (x >= limit) x = engine_();
    return x % n;
  }

  std::uint64_t raw() { return engine_(); }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

namespace detail {
// SplitMix64 finalizer, used to mix seed and domain tag.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}
}  // namespace detail

// Derives the seed for a named stream from the user-facing seed.
inline std::uint64_t domain_seed(std::uint64_t seed, std::string_view domain) {
  return detail::splitmix64(seed ^ detail::fnv1a(domain));
}

inline Rng domain_rng(std::uint64_t seed, std::string_view domain) {
  return Rng(domain_seed(seed, domain));
}

}  // namespace aepg
