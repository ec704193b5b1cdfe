#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <utility>
#include <vector>

#include "graphdiff/error.hpp"

namespace graphdiff {

struct RegressionFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  double slope_ci_halfwidth = 0.0;
  std::size_t points = 0;
};

struct Point {
  double x = 0.0;
  double y = 0.0;
};

// OLS of ln y on ln x.
inline RegressionFit loglog_fit(std::span<const Point> points) {
  detail::require(points.size() >= 3, "log-log fit needs at least 3 points");
  double sx = 0.0, sy = 0.0;
  for (const auto& p : points) {
    detail::require(p.x > 0.0 && p.y > 0.0 && std::isfinite(p.x) && std::isfinite(p.y),
                    "log-log fit needs strictly positive finite values");
    sx += std::log(p.x);
    sy += std::log(p.y);
  }
  const double k = static_cast<double>(points.size());
  const double mx = sx / k, my = sy / k;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (const auto& p : points) {
    const double dx = std::log(p.x) - mx;
    const double dy = std::log(p.y) - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (!(sxx > 1e-24 * k)) throw DegenerateFitError("log-log fit needs at least two distinct x values");
  RegressionFit fit;
  fit.points = points.size();
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r_squared = syy > 0.0 ? std::clamp(sxy * sxy / (sxx * syy), 0.0, 1.0) : 1.0;
  return fit;
}

inline RegressionFit loglog_fit(const std::vector<Point>& points) {
  return loglog_fit(std::span<const Point>(points));
}

// Two-sided 97.5% Student t quantile; normal approximation beyond 30 degrees
// of freedom.
inline double t_quantile_975(std::size_t df) {
  static constexpr std::array<double, 30> table = {
      12.706, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365, 2.306, 2.262, 2.228,
      2.201,  2.179, 2.160, 2.145, 2.131, 2.120, 2.110, 2.101, 2.093, 2.086,
      2.080,  2.074, 2.069, 2.064, 2.060, 2.056, 2.052, 2.048, 2.045, 2.042};
  detail::require(df >= 1, "degrees of freedom must be >= 1");
  return df <= table.size() ? table[df - 1] : 1.96;
}

struct MeanCi {
  double mean = 0.0;
  double halfwidth = 0.0;
};

// mean +- t_{0.975, n-1} s / sqrt(n). Only the 95% level is tabulated.
inline MeanCi confidence_interval(std::span<const double> samples, double level = 0.95) {
  detail::require(samples.size() >= 2, "confidence interval needs at least 2 samples");
  detail::require(level == 0.95, "only the 95% level is supported");
  const double n = static_cast<double>(samples.size());
  const double mean = std::accumulate(samples.begin(), samples.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : samples) ss += (v - mean) * (v - mean);
  const double s = std::sqrt(ss / (n - 1.0));
  return {mean, t_quantile_975(samples.size() - 1) * s / std::sqrt(n)};
}

inline MeanCi confidence_interval(const std::vector<double>& samples, double level = 0.95) {
  return confidence_interval(std::span<const double>(samples), level);
}

namespace detail {

// Average ranks, ties sharing the mean rank.
inline std::vector<double> ranks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[order[k]] = avg;
    i = j + 1;
  }
  return r;
}

}  // namespace detail

// Spearman rank correlation (Pearson correlation of average ranks).
inline double spearman(std::span<const double> x, std::span<const double> y) {
  detail::require(x.size() == y.size() && x.size() >= 2, "spearman needs two equal-length samples of size >= 2");
  const auto rx = detail::ranks(x);
  const auto ry = detail::ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) throw NumericError("spearman is undefined for a constant sample");
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace graphdiff
