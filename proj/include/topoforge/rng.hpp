#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>

namespace topoforge {

// std::mt19937_64 is fully specified by the standard; the helpers below avoid
// the implementation-defined std::*_distribution so that a seed produces the
// same stream with every standard library.
using Rng = std::mt19937_64;

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Seed of the index-th independent stream derived from a master seed.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) noexcept {
  return splitmix64(splitmix64(master) ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

// Uniform on [0, 1) with 53 random bits.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform(Rng& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(rng);
}

// Uniform integer in [0, n), unbiased by rejection.
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("uniform_index: empty range");
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
  std::uint64_t x = rng();
  while (x >= limit) x = rng();
  return x % n;
}

// Log-uniform on [lo, hi]; a degenerate range returns lo exactly.
inline double log_uniform(Rng& rng, double lo, double hi) {
  if (!(lo > 0.0) || hi < lo) throw std::invalid_argument("log_uniform: need 0 < lo <= hi");
  if (lo == hi) return lo;
  const double v = std::exp(uniform(rng, std::log(lo), std::log(hi)));
  return v < lo ? lo : (v > hi ? hi : v);
}

}  // namespace topoforge
