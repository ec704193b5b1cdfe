#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <set>
#include <vector>

#include "graphdiff/graph.hpp"
#include "graphdiff/graph_gen.hpp"
#include "graphdiff/stats.hpp"

using namespace graphdiff;

TEST(PairIndex, IsABijectionInRowMajorOrder) {
  const std::uint64_t n = 7;
  std::uint64_t expected = 0;
  for (std::uint64_t i = 0; i < n; ++i)
    for (std::uint64_t j = i + 1; j < n; ++j) {
      EXPECT_EQ(pair_index(i, j, n), expected);
      EXPECT_EQ(pair_index(j, i, n), expected);
      ++expected;
    }
  EXPECT_EQ(expected, pair_count(n));
  EXPECT_EQ(pair_count(0), 0u);
  EXPECT_EQ(pair_count(1), 0u);
}

TEST(PairBits, SetFlipCountAndTail) {
  PairBits b(12);  // 66 pairs, so the last word is partial
  EXPECT_EQ(b.size(), 66u);
  b.set(3);
  b.flip(65);
  EXPECT_TRUE(b.test(3));
  EXPECT_TRUE(b.test(65));
  EXPECT_EQ(b.count(), 2u);
  b.complement();
  EXPECT_EQ(b.count(), 64u);
  b.fill();
  EXPECT_EQ(b.count(), 66u);
  PairBits other(12);
  EXPECT_EQ(b.count_differences(other), 66u);
  EXPECT_THROW(b.count_differences(PairBits(5)), ParameterError);
}

TEST(PairBits, ForEachSetVisitsInOrder) {
  PairBits b(40);
  const std::vector<std::uint64_t> want = {0, 63, 64, 200, 779};
  for (auto i : want) b.set(i);
  std::vector<std::uint64_t> got;
  b.for_each_set([&](std::uint64_t i) { got.push_back(i); });
  EXPECT_EQ(got, want);
}

TEST(Graph, EdgesDegreesAndSymmetry) {
  const Graph g = generate_er(30, 0.3, 4);
  std::uint64_t visited = 0;
  g.for_each_edge([&](std::uint64_t i, std::uint64_t j) {
    EXPECT_LT(i, j);
    EXPECT_TRUE(g.has_edge(i, j));
    EXPECT_TRUE(g.has_edge(j, i));
    ++visited;
  });
  EXPECT_EQ(visited, g.edge_count());
  std::uint64_t deg_sum = 0;
  for (auto d : g.degrees()) deg_sum += d;
  EXPECT_EQ(deg_sum, 2 * g.edge_count());
  for (std::uint64_t i = 0; i < 30; ++i) EXPECT_FALSE(g.has_edge(i, i));
}

TEST(Graph, DensityEdgeCases) {
  EXPECT_EQ(Graph::empty(1).density(), 0.0);
  EXPECT_EQ(Graph::complete(6).density(), 1.0);
  EXPECT_EQ(Graph::complete(6).edge_count(), 15u);
  EXPECT_THROW(Graph(PairBits(0)), ParameterError);
}

TEST(GenerateEr, DensityNearTarget) {
  const Graph g = generate_er(500, 0.1, 11);
  const double m = static_cast<double>(g.pairs());
  const double sd = std::sqrt(0.1 * 0.9 / m);
  EXPECT_NEAR(g.density(), 0.1, 4 * sd);
}

TEST(GenerateEr, DeterministicPerSeed) {
  EXPECT_EQ(generate_er(100, 0.2, 5), generate_er(100, 0.2, 5));
  EXPECT_FALSE(generate_er(100, 0.2, 5) == generate_er(100, 0.2, 6));
  EXPECT_EQ(generate_er(50, 0.0, 1).edge_count(), 0u);
  EXPECT_EQ(generate_er(50, 1.0, 1).edge_count(), pair_count(50));
  EXPECT_THROW(generate_er(10, 1.5, 1), ParameterError);
}

TEST(GenerateSbm, BlockLayout) {
  SbmSpec s{10, 3};
  EXPECT_EQ(s.block_ends(), (std::vector<std::uint64_t>{4, 7, 10}));
  EXPECT_THROW((SbmSpec{2, 3}.validate()), ParameterError);
  EXPECT_THROW((SbmSpec{10, 3, 0.1, 0.3}.validate()), ParameterError);
}

TEST(GenerateSbm, IntraAndInterDensities) {
  SbmSpec s{900, 3, 0.3, 0.05};
  const Graph g = generate_sbm(s, 3);
  double intra = 0, intra_pairs = 0, inter = 0, inter_pairs = 0;
  for (std::uint64_t i = 0; i < s.n; ++i)
    for (std::uint64_t j = i + 1; j < s.n; ++j) {
      const bool same = i / 300 == j / 300;
      (same ? intra_pairs : inter_pairs) += 1;
      if (g.has_edge(i, j)) (same ? intra : inter) += 1;
    }
  EXPECT_NEAR(intra / intra_pairs, 0.3, 4 * std::sqrt(0.21 / intra_pairs));
  EXPECT_NEAR(inter / inter_pairs, 0.05, 4 * std::sqrt(0.0475 / inter_pairs));
}

TEST(GeneratePowerlaw, DegreeTailFollowsExponent) {
  const PowerLawSpec spec{20000, 2.5, 2};
  const Graph g = generate_powerlaw(spec, 17);
  // Log-binned degree density over [4, 200], normalised by bin width.
  std::map<int, double> bins;
  for (auto d : g.degrees())
    if (d >= 4 && d < 200) bins[static_cast<int>(std::floor(std::log2(static_cast<double>(d))))] += 1.0;
  std::vector<Point> pts;
  for (const auto& [b, c] : bins) {
    const double lo = std::ldexp(1.0, b);
    pts.push_back({lo * std::sqrt(2.0), c / lo});
  }
  const auto fit = loglog_fit(pts);
  EXPECT_NEAR(fit.slope, -2.5, 0.35);
}

TEST(GeneratePowerlaw, Validation) {
  EXPECT_THROW(generate_powerlaw({100, 2.0, 2}, 1), ParameterError);
  EXPECT_THROW(generate_powerlaw({100, 2.5, 100}, 1), ParameterError);
  EXPECT_EQ(generate_powerlaw({300, 2.5, 2}, 9), generate_powerlaw({300, 2.5, 2}, 9));
}

TEST(DegreeMoments, CompleteGraph) {
  const auto m = degree_moments(Graph::complete(5));
  EXPECT_EQ(m.mean_degree, 4.0);
  EXPECT_EQ(m.second_moment, 16.0);
  EXPECT_EQ(m.k_max, 4u);
}

TEST(GenerateEr, SpecExamples) {
  EXPECT_EQ(generate_er(5, 0.0, 1).edge_count(), 0u);
  EXPECT_EQ(generate_er(5, 1.0, 1).edge_count(), 10u);
  const double e = static_cast<double>(generate_er(1000, 0.1, 3).edge_count());
  // C(1000, 2) = 499500 pairs.
  EXPECT_NEAR(e, 49950.0, 4.0 * std::sqrt(499500 * 0.09));
  EXPECT_THROW(generate_er(1, 0.5, 1), ParameterError);
}

TEST(GenerateSbm, DeterministicBlocks) {
  const Graph g = generate_sbm({6, 3, 1.0, 0.0}, 1);
  EXPECT_EQ(g.edge_count(), 3u);
  EXPECT_TRUE(g.has_edge(0, 1));
  EXPECT_TRUE(g.has_edge(2, 3));
  EXPECT_TRUE(g.has_edge(4, 5));
}

TEST(GenerateSbm, SingleBlockMatchesEr) {
  double s_sbm = 0, s_er = 0;
  const int seeds = 4000;
  for (int s = 0; s < seeds; ++s) {
    s_sbm += static_cast<double>(generate_sbm({6, 1, 0.4, 0.0}, derive_seed(1, s)).edge_count());
    s_er += static_cast<double>(generate_er(6, 0.4, derive_seed(2, s)).edge_count());
  }
  const double se = std::sqrt(15 * 0.24 / seeds);
  EXPECT_NEAR(s_sbm / seeds, 6.0, 4 * se);
  EXPECT_NEAR(s_er / seeds, 6.0, 4 * se);
}

TEST(GenerateSbm, EdgeCountMatchesExactExpectation) {
  const SbmSpec s{300, 3, 0.3, 0.05};
  const double intra = 3 * 100 * 99 / 2.0, inter = 3 * 100 * 100.0;
  const double mean = intra * 0.3 + inter * 0.05;
  const double sd = std::sqrt(intra * 0.21 + inter * 0.0475);
  EXPECT_NEAR(static_cast<double>(generate_sbm(s, 8).edge_count()), mean, 4 * sd);
}

TEST(GeneratePowerlaw, SecondMomentStableForSteepTail) {
  double small = 0, large = 0;
  for (int s = 0; s < 10; ++s) {
    small += degree_moments(generate_powerlaw({1000, 6.0, 2}, derive_seed(3, s))).second_moment / 10;
    large += degree_moments(generate_powerlaw({8000, 6.0, 2}, derive_seed(4, s))).second_moment / 10;
  }
  EXPECT_LT(large / small, std::pow(8.0, 0.1));
}

TEST(GeneratePowerlaw, SmallGraphInvariants) {
  const Graph g = generate_powerlaw({10, 3.0, 1}, 5);
  std::uint64_t deg_sum = 0;
  for (auto d : g.degrees()) deg_sum += d;
  EXPECT_EQ(deg_sum, 2 * g.edge_count());
  for (std::uint64_t i = 0; i < 10; ++i) EXPECT_FALSE(g.has_edge(i, i));
}

TEST(DegreeMoments, SpecExamples) {
  const auto k4 = degree_moments(Graph::complete(4));
  EXPECT_EQ(k4.mean_degree, 3.0);
  EXPECT_EQ(k4.second_moment, 9.0);
  EXPECT_EQ(k4.k_max, 3u);
  const auto empty = degree_moments(Graph::empty(5));
  EXPECT_EQ(empty.mean_degree, 0.0);
  EXPECT_EQ(empty.second_moment, 0.0);
  EXPECT_EQ(empty.k_max, 0u);
  PairBits path(3);
  path.set(pair_index(0, 1, 3));
  path.set(pair_index(1, 2, 3));
  const auto p = degree_moments(Graph(path));
  EXPECT_DOUBLE_EQ(p.mean_degree, 4.0 / 3.0);
  EXPECT_EQ(p.second_moment, 2.0);
  EXPECT_EQ(p.k_max, 2u);
}
