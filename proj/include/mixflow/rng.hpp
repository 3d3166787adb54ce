#pragma once

#include <cstdint>
#include <random>

#include "mixflow/math.hpp"

namespace mixflow {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Deterministic substream keyed by (seed, a, b). Streams for distinct keys
// are independent for practical purposes; the same key always yields the
// same generator, which is what makes parallel sweeps reproducible.
inline Rng make_stream(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  std::uint64_t s = seed;
  std::uint64_t h = splitmix64(s);
  s += a;
  h ^= splitmix64(s);
  s += b;
  h ^= splitmix64(s);
  return Rng(h);
}

// Uniform on [0, 1): 53 random bits scaled by 2^-53.
inline double uniform01(Rng& g) {
  return static_cast<double>(g() >> 11) * 0x1.0p-53;
}

// Uniform on (0, 1): midpoints of the uniform01 grid, never 0 or 1.
inline double uniform01_open(Rng& g) {
  return (static_cast<double>(g() >> 11) + 0.5) * 0x1.0p-53;
}

// Uniform integer in {0, ..., n-1} by rejection (no modulo bias).
inline std::uint64_t uniform_below(Rng& g, std::uint64_t n) {
  if (n == 0) return 0;
  std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n + 1) % n;
  for (;;) {
    std::uint64_t r = g();
    if (r <= limit) return r % n;
  }
}

inline double standard_normal(Rng& g) {
  return normal_quantile(uniform01_open(g));
}

inline double standard_laplace(Rng& g) {
  return laplace_quantile(uniform01_open(g));
}

}  // namespace mixflow
