#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "graphdiff/error.hpp"
#include "graphdiff/graph.hpp"
#include "graphdiff/rng.hpp"

namespace graphdiff {

struct SbmSpec {
  std::uint64_t n = 0;
  std::uint64_t k = 3;
  double p_intra = 0.3;
  double p_inter = 0.05;

  void validate() const {
    detail::require(n >= 2, "sbm needs n >= 2");
    detail::require(k >= 1 && k <= n, "sbm needs 1 <= k <= n");
    detail::require_probability(p_intra, "p_intra");
    detail::require_probability(p_inter, "p_inter");
    detail::require(p_inter <= p_intra, "sbm needs p_inter <= p_intra");
  }

  // Exclusive end node of each community. Blocks are contiguous and the first
  // n % k blocks receive one extra node.
  std::vector<std::uint64_t> block_ends() const {
    std::vector<std::uint64_t> ends(k);
    const std::uint64_t base = n / k;
    const std::uint64_t extra = n % k;
    std::uint64_t at = 0;
    for (std::uint64_t b = 0; b < k; ++b) {
      at += base + (b < extra ? 1 : 0);
      ends[b] = at;
    }
    return ends;
  }
};

struct PowerLawSpec {
  std::uint64_t n = 0;
  double alpha = 2.5;
  std::uint64_t k_min = 2;

  void validate() const {
    detail::require(n >= 2, "power-law graph needs n >= 2");
    detail::require(alpha > 2.0 && std::isfinite(alpha), "alpha must be > 2");
    detail::require(k_min >= 1 && k_min <= n - 1, "k_min must be in [1, n-1]");
  }
};

inline Graph generate_er(std::uint64_t n, double p_edge, std::uint64_t seed) {
  detail::require(n >= 2, "er needs n >= 2");
  detail::require_probability(p_edge, "p_edge");
  PairBits bits(n);
  Rng rng = make_rng(seed);
  for_each_bernoulli(0, bits.size(), p_edge, rng, [&](std::uint64_t idx) { bits.set(idx); });
  return Graph(std::move(bits));
}

inline Graph generate_sbm(const SbmSpec& spec, std::uint64_t seed) {
  spec.validate();
  const std::uint64_t n = spec.n;
  PairBits bits(n);
  Rng rng = make_rng(seed);
  const auto ends = spec.block_ends();
  auto set = [&](std::uint64_t idx) { bits.set(idx); };
  std::uint64_t block = 0;
  for (std::uint64_t i = 0; i + 1 < n; ++i) {
    while (i >= ends[block]) ++block;
    // Row i covers j in (i, n): same block up to ends[block], then the rest.
    const std::uint64_t start = row_offset(i, n);
    const std::uint64_t intra_end = start + (ends[block] - i - 1);
    const std::uint64_t row_end = start + (n - i - 1);
    for_each_bernoulli(start, intra_end, spec.p_intra, rng, set);
    for_each_bernoulli(intra_end, row_end, spec.p_inter, rng, set);
  }
  return Graph(std::move(bits));
}

// Discrete power-law degree sequence on [k_min, n-1] wired by the configuration
// model; self-loops and repeated pairs are dropped.
inline Graph generate_powerlaw(const PowerLawSpec& spec, std::uint64_t seed) {
  spec.validate();
  const std::uint64_t n = spec.n;
  Rng rng = make_rng(seed);

  std::vector<double> weights;
  weights.reserve(n - spec.k_min);
  for (std::uint64_t k = spec.k_min; k <= n - 1; ++k)
    weights.push_back(std::pow(static_cast<double>(k), -spec.alpha));
  std::discrete_distribution<std::uint64_t> degree_dist(weights.begin(), weights.end());

  std::vector<std::uint64_t> degree(n);
  std::uint64_t total = 0;
  for (auto& d : degree) {
    d = spec.k_min + degree_dist(rng);
    total += d;
  }
  if (total % 2 == 1) {
    std::uniform_int_distribution<std::uint64_t> pick(0, n - 1);
    for (;;) {
      const std::uint64_t v = pick(rng);
      if (degree[v] < n - 1) {
        ++degree[v];
        break;
      }
    }
  }

  std::vector<std::uint32_t> stubs;
  stubs.reserve(total + 1);
  for (std::uint64_t v = 0; v < n; ++v)
    stubs.insert(stubs.end(), degree[v], static_cast<std::uint32_t>(v));
  std::shuffle(stubs.begin(), stubs.end(), rng);

  PairBits bits(n);
  for (std::size_t s = 0; s + 1 < stubs.size(); s += 2) {
    const std::uint64_t a = stubs[s];
    const std::uint64_t b = stubs[s + 1];
    if (a == b) continue;
    bits.set(pair_index(a, b, n));  // setting twice keeps the pair simple
  }
  return Graph(std::move(bits));
}

struct DegreeMoments {
  double mean_degree = 0.0;
  double second_moment = 0.0;
  std::uint64_t k_max = 0;
};

inline DegreeMoments degree_moments(const Graph& g) {
  const auto deg = g.degrees();
  DegreeMoments m;
  double s1 = 0.0;
  double s2 = 0.0;
  for (auto d : deg) {
    const double x = static_cast<double>(d);
    s1 += x;
    s2 += x * x;
    m.k_max = std::max(m.k_max, d);
  }
  const double n = static_cast<double>(deg.size());
  m.mean_degree = s1 / n;
  m.second_moment = s2 / n;
  return m;
}

}  // namespace graphdiff
