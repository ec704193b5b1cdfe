#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "graphdiff/rng.hpp"
#include "graphdiff/stats.hpp"

using namespace graphdiff;

TEST(LoglogFit, ExactPowerLaws) {
  const std::vector<Point> inv = {{10, 0.7}, {100, 0.07}, {1000, 0.007}};
  const auto f = loglog_fit(inv);
  EXPECT_NEAR(f.slope, -1.0, 1e-12);
  EXPECT_NEAR(f.r_squared, 1.0, 1e-12);
  EXPECT_NEAR(std::exp(f.intercept), 7.0, 1e-10);
  EXPECT_EQ(f.points, 3u);
  std::vector<Point> sq;
  for (double x : {2.0, 3.0, 5.0, 8.0}) sq.push_back({x, 3 * x * x});
  EXPECT_NEAR(loglog_fit(sq).slope, 2.0, 1e-12);
}

TEST(LoglogFit, RandomExponentsRecovered) {
  Rng rng = make_rng(1);
  for (int k = 0; k < 100; ++k) {
    const double a = 4.0 * uniform01(rng) - 2.0, c = 0.1 + 10.0 * uniform01(rng);
    std::vector<Point> pts;
    for (double x = 1.0; x < 1e6; x *= 7.3) pts.push_back({x, c * std::pow(x, a)});
    EXPECT_NEAR(loglog_fit(pts).slope, a, 1e-12);
  }
}

TEST(LoglogFit, Errors) {
  EXPECT_THROW(loglog_fit(std::vector<Point>{{1, 1}, {2, 2}}), ParameterError);
  EXPECT_THROW(loglog_fit(std::vector<Point>{{1, 1}, {2, 0}, {3, 1}}), ParameterError);
  EXPECT_THROW(loglog_fit(std::vector<Point>{{-1, 1}, {2, 1}, {3, 1}}), ParameterError);
  EXPECT_THROW(loglog_fit(std::vector<Point>{{5, 1}, {5, 2}, {5, 3}}), DegenerateFitError);
}

TEST(LoglogFit, NoisyRSquaredInRange) {
  std::mt19937_64 gen(3);
  std::normal_distribution<double> noise(0.0, 0.3);
  std::vector<Point> pts;
  for (double x = 1; x < 100; x += 3) pts.push_back({x, std::exp(noise(gen))});
  const auto f = loglog_fit(pts);
  EXPECT_GE(f.r_squared, 0.0);
  EXPECT_LE(f.r_squared, 1.0);
}

TEST(ConfidenceInterval, Examples) {
  const auto same = confidence_interval(std::vector<double>{2.5, 2.5, 2.5});
  EXPECT_EQ(same.mean, 2.5);
  EXPECT_EQ(same.halfwidth, 0.0);
  const auto five = confidence_interval(std::vector<double>{1, 2, 3, 4, 5});
  EXPECT_EQ(five.mean, 3.0);
  EXPECT_NEAR(five.halfwidth, 2.776 * std::sqrt(2.5) / std::sqrt(5.0), 1e-12);
  EXPECT_NEAR(five.halfwidth, 1.963, 5e-4);
  const auto two = confidence_interval(std::vector<double>{0, 2});
  EXPECT_EQ(two.mean, 1.0);
  EXPECT_NEAR(two.halfwidth, 12.706, 1e-12);
  EXPECT_THROW(confidence_interval(std::vector<double>{1.0}), ParameterError);
  EXPECT_THROW(confidence_interval(std::vector<double>{1.0, 2.0}, 0.9), ParameterError);
}

TEST(ConfidenceInterval, TQuantileTable) {
  EXPECT_EQ(t_quantile_975(1), 12.706);
  EXPECT_EQ(t_quantile_975(4), 2.776);
  EXPECT_EQ(t_quantile_975(30), 2.042);
  EXPECT_EQ(t_quantile_975(31), 1.96);
  EXPECT_THROW(t_quantile_975(0), ParameterError);
  for (std::size_t df = 2; df <= 31; ++df) EXPECT_LE(t_quantile_975(df), t_quantile_975(df - 1));
}

TEST(ConfidenceInterval, ShrinksAsInverseRootN) {
  // Expected halfwidth ratio at n = 5 vs 20 is (t_4 / t_19) * sqrt(20 / 5) * E[s_5] / E[s_20].
  std::mt19937_64 gen(4);
  std::normal_distribution<double> z;
  double h5 = 0, h20 = 0;
  const int reps = 20000;
  for (int r = 0; r < reps; ++r) {
    std::vector<double> a(5), b(20);
    for (auto& v : a) v = z(gen);
    for (auto& v : b) v = z(gen);
    h5 += confidence_interval(a).halfwidth;
    h20 += confidence_interval(b).halfwidth;
  }
  // c4(n) = E[s] / sigma for normal samples.
  const double c4_5 = 0.9399856, c4_20 = 0.9869343;
  const double expected = t_quantile_975(4) / t_quantile_975(19) * 2.0 * c4_5 / c4_20;
  EXPECT_NEAR((h5 / reps) / (h20 / reps), expected, 0.15 * expected);
}

TEST(Spearman, RanksAndTies) {
  const std::vector<double> x = {1, 2, 3, 4, 5};
  const std::vector<double> down = {9, 7, 5, 3, 1};
  EXPECT_DOUBLE_EQ(spearman(x, down), -1.0);
  EXPECT_DOUBLE_EQ(spearman(x, x), 1.0);
  const std::vector<double> curved = {1, 8, 27, 64, 125};
  EXPECT_DOUBLE_EQ(spearman(x, curved), 1.0);
  const auto r = detail::ranks(std::vector<double>{3, 1, 3, 2});
  EXPECT_EQ(r, (std::vector<double>{3.5, 1, 3.5, 2}));
  EXPECT_THROW(spearman(x, std::vector<double>{1, 1, 1, 1, 1}), NumericError);
  EXPECT_THROW(spearman(x, std::vector<double>{1, 2}), ParameterError);
}
