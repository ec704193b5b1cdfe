#pragma once

#include <cmath>
#include <concepts>
#include <cstdint>
#include <random>

namespace graphdiff {

using Rng = std::mt19937_64;

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Stream seed for one experiment cell. The result depends only on the keys,
// never on the order in which cells are scheduled.
template <std::integral... Keys>
constexpr std::uint64_t derive_seed(std::uint64_t base, Keys... keys) {
  std::uint64_t h = mix64(base);
  ((h = mix64(h ^ mix64(static_cast<std::uint64_t>(keys) + 0x632BE59BD9B4E019ULL))), ...);
  return h;
}

inline Rng make_rng(std::uint64_t seed) { return Rng{seed}; }

// Uniform on [0, 1) with 53 random bits.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

// Uniform on (0, 1].
inline double uniform_open_closed(Rng& rng) {
  return static_cast<double>((rng() >> 11) + 1) * 0x1.0p-53;
}

inline bool bernoulli(Rng& rng, double p) { return uniform01(rng) < p; }

// Calls fn(i) for every index i in [begin, end) that succeeds an independent
// Bernoulli(p) trial. Gaps between successes are drawn from the geometric law,
// so the cost is proportional to the number of successes.
template <class Fn>
void for_each_bernoulli(std::uint64_t begin, std::uint64_t end, double p, Rng& rng, Fn&& fn) {
  if (!(p > 0.0) || begin >= end) return;
  if (p >= 1.0) {
    for (std::uint64_t i = begin; i < end; ++i) fn(i);
    return;
  }
  const double log_q = std::log1p(-p);
  std::uint64_t i = begin;
  for (;;) {
    const double skip = std::floor(std::log(uniform_open_closed(rng)) / log_q);
    if (skip >= static_cast<double>(end - i)) return;
    i += static_cast<std::uint64_t>(skip);
    fn(i);
    if (++i >= end) return;
  }
}

}  // namespace graphdiff
