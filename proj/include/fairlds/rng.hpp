#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace fairlds::rng {

/// splitmix64 mix; used to derive independent child seeds from a master
/// seed plus a stream tag, so trajectories get their own streams no matter
/// how many draws their neighbours consume.
inline std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0,
                            std::uint64_t c = 0) {
  return mix(mix(mix(seed ^ mix(a)) ^ mix(b)) ^ mix(c));
}

/// Uniform in [0, 1) from the top 53 bits of the engine output. The engine
/// (mt19937_64) is pinned by the standard, and this mapping avoids the
/// implementation-defined std::uniform_real_distribution, so streams are
/// bit-identical across platforms.
inline double uniform01(std::mt19937_64& eng) {
  return static_cast<double>(eng() >> 11) * 0x1.0p-53;
}

inline double uniform(std::mt19937_64& eng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(eng);
}

/// Standard normal via Box-Muller on the pinned uniform stream; two
/// engine draws per call.
inline double normal(std::mt19937_64& eng) {
  double u1 = uniform01(eng);
  while (u1 <= 0.0) u1 = uniform01(eng);
  double u2 = uniform01(eng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

/// Uniform integer in [0, n) by rejection; unbiased and portable.
inline std::uint64_t below(std::mt19937_64& eng, std::uint64_t n) {
  if (n == 0) return 0;
  std::uint64_t limit = ~0ULL - (~0ULL % n);
  std::uint64_t x;
  do {
    x = eng();
  } while (x >= limit);
  return x % n;
}

}  // namespace fairlds::rng
