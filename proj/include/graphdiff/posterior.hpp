#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <variant>
#include <vector>

#include "graphdiff/error.hpp"
#include "graphdiff/graph.hpp"
#include "graphdiff/noise.hpp"
#include "graphdiff/rng.hpp"

namespace graphdiff {

// Beta(a, b) posterior over the flip rate after a conjugate update.
struct BetaPosterior {
  double a = 1.0;
  double b = 1.0;
  double alpha0 = 1.0;
  double beta0 = 1.0;

  double mean() const { return a / (a + b); }
  double variance() const {
    const double s = a + b;
    return a * b / (s * s * (s + 1.0));
  }
};

inline BetaPosterior beta_posterior(std::uint64_t flips, std::uint64_t pairs, double alpha0 = 1.0,
                                    double beta0 = 1.0) {
  detail::require(flips <= pairs, "flip count exceeds number of pairs");
  detail::require_positive(alpha0, "alpha0");
  detail::require_positive(beta0, "beta0");
  return {static_cast<double>(flips) + alpha0, static_cast<double>(pairs - flips) + beta0, alpha0, beta0};
}

// Beta(1, 1) posterior mean, (K + 1) / (M + 2).
inline double posterior_mean_estimator(std::uint64_t flips, std::uint64_t pairs) {
  detail::require(flips <= pairs, "flip count exceeds number of pairs");
  return (static_cast<double>(flips) + 1.0) / (static_cast<double>(pairs) + 2.0);
}

// Leading-order posterior variance beta (1 - beta) / M.
inline double variance_asymptotic(double beta_true, std::uint64_t pairs) {
  detail::require(pairs >= 1, "M must be >= 1");
  detail::require(beta_true > 0.0 && beta_true < 1.0, "beta must be in (0,1)");
  // beta - beta^2 with a single rounding, so the numerator is correctly rounded.
  return std::fma(-beta_true, beta_true, beta_true) / static_cast<double>(pairs);
}

struct BetaPrior {
  double alpha0 = 1.0;
  double beta0 = 1.0;
};

// Piecewise-linear density on [0, 1]. Abscissae are non-decreasing; a repeated
// abscissa encodes a jump.
struct TabulatedPrior {
  std::vector<double> x;
  std::vector<double> density;

  void validate() const {
    detail::require(x.size() == density.size() && x.size() >= 2, "tabulated prior needs matching x/density");
    double mass = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      detail::require(x[i] >= 0.0 && x[i] <= 1.0, "tabulated prior abscissae must lie in [0,1]");
      detail::require(density[i] >= 0.0 && std::isfinite(density[i]), "tabulated prior density must be >= 0");
      if (i > 0) {
        detail::require(x[i] >= x[i - 1], "tabulated prior abscissae must be non-decreasing");
        mass += 0.5 * (density[i] + density[i - 1]) * (x[i] - x[i - 1]);
      }
    }
    detail::require(std::abs(mass - 1.0) <= 1e-9, "tabulated prior must integrate to 1");
  }

  double operator()(double b) const {
    if (b < x.front() || b > x.back()) return 0.0;
    auto it = std::upper_bound(x.begin(), x.end(), b);
    if (it == x.end()) return density.back();
    const std::size_t hi = static_cast<std::size_t>(it - x.begin());
    const std::size_t lo = hi - 1;
    const double w = x[hi] - x[lo];
    if (w <= 0.0) return density[hi];
    return density[lo] + (density[hi] - density[lo]) * (b - x[lo]) / w;
  }

  static TabulatedPrior truncated_uniform(double lo, double hi) {
    detail::require(0.0 <= lo && lo < hi && hi <= 1.0, "truncated uniform needs 0 <= lo < hi <= 1");
    const double h = 1.0 / (hi - lo);
    return {{0.0, lo, lo, hi, hi, 1.0}, {0.0, 0.0, h, h, 0.0, 0.0}};
  }
};

using PriorSpec = std::variant<BetaPrior, TabulatedPrior>;

struct PosteriorMoments {
  double mean = 0.0;
  double variance = 0.0;
};

namespace detail {

inline double log_prior(const PriorSpec& prior, double b) {
  if (const auto* bp = std::get_if<BetaPrior>(&prior)) {
    // Normalising constant cancels; zero exponents are skipped so 0 * log(0) never appears.
    double l = 0.0;
    if (bp->alpha0 != 1.0) l += (bp->alpha0 - 1.0) * std::log(b);
    if (bp->beta0 != 1.0) l += (bp->beta0 - 1.0) * std::log1p(-b);
    return l;
  }
  const double d = std::get<TabulatedPrior>(prior)(b);
  return d > 0.0 ? std::log(d) : -std::numeric_limits<double>::infinity();
}

// Trapezoid moments of an unnormalised log density sampled on a uniform grid.
inline PosteriorMoments trapezoid_moments(std::span<const double> x, std::span<const double> log_w) {
  double peak = -std::numeric_limits<double>::infinity();
  for (double l : log_w) peak = std::max(peak, l);
  if (!std::isfinite(peak)) throw NumericError("posterior is not normalisable");
  double z = 0.0, s1 = 0.0;
  std::vector<double> w(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double edge = (i == 0 || i + 1 == x.size()) ? 0.5 : 1.0;
    w[i] = std::isfinite(log_w[i]) ? edge * std::exp(log_w[i] - peak) : 0.0;
    z += w[i];
    s1 += w[i] * x[i];
  }
  if (!(z > 0.0) || !std::isfinite(z)) throw NumericError("posterior is not normalisable");
  const double mean = s1 / z;
  double s2 = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s2 += w[i] * (x[i] - mean) * (x[i] - mean);
  return {mean, s2 / z};
}

}  // namespace detail

// Quadrature posterior for a general prior: trapezoid rule on a uniform grid
// over [0, 1] of beta^K (1 - beta)^(M-K) pi(beta), accumulated in log space.
inline PosteriorMoments posterior_grid_oracle(std::uint64_t flips, std::uint64_t pairs, const PriorSpec& prior,
                                              std::size_t grid_size = 20001) {
  detail::require(flips <= pairs, "flip count exceeds number of pairs");
  detail::require(grid_size >= 1000, "grid_size must be >= 1000");
  if (const auto* tp = std::get_if<TabulatedPrior>(&prior)) tp->validate();
  if (const auto* bp = std::get_if<BetaPrior>(&prior)) {
    detail::require_positive(bp->alpha0, "alpha0");
    detail::require_positive(bp->beta0, "beta0");
  }
  const double k = static_cast<double>(flips);
  const double rest = static_cast<double>(pairs - flips);
  std::vector<double> x(grid_size), lw(grid_size);
  const double h = 1.0 / static_cast<double>(grid_size - 1);
  for (std::size_t i = 0; i < grid_size; ++i) {
    const double b = static_cast<double>(i) * h;
    x[i] = b;
    double l = 0.0;
    if (k > 0.0) l += k * std::log(b);
    if (rest > 0.0) l += rest * std::log1p(-b);
    lw[i] = l + detail::log_prior(prior, b);
    if (std::isnan(lw[i])) lw[i] = -std::numeric_limits<double>::infinity();
  }
  return detail::trapezoid_moments(x, lw);
}

// tau_X estimate from the pooled sample variance of all feature components,
// assuming clean components are N(0, 1).
inline double estimate_tau_x(std::span<const double> noisy_features) {
  detail::require(noisy_features.size() >= 2, "need at least two feature components");
  double mean = 0.0;
  for (double v : noisy_features) mean += v;
  mean /= static_cast<double>(noisy_features.size());
  double ss = 0.0;
  for (double v : noisy_features) ss += (v - mean) * (v - mean);
  const double var = ss / static_cast<double>(noisy_features.size() - 1);
  return std::max(0.0, var - 1.0);
}

inline double estimate_tau_x(const FeatureMatrix& x) { return estimate_tau_x(x.values()); }

// Predicted decay exponent (alpha - 2) / (alpha - 1) of the flip-rate posterior
// variance on power-law graphs.
inline double scale_free_exponent(double alpha) {
  detail::require(alpha > 2.0 && std::isfinite(alpha), "alpha must be > 2");
  return (alpha - 2.0) / (alpha - 1.0);
}

struct DependentFlipStats {
  double empirical_var = 0.0;  // sample variance of K over trials
  double iid_var = 0.0;        // M beta (1 - beta)
  double ratio() const { return empirical_var / iid_var; }
};

// Flips with bounded dependency. Pairs are grouped in index order into blocks
// of dependency_degree + 1; each non-leader copies its block leader's flip
// decision with probability mixing, otherwise keeps its own. Every pair stays
// marginally Bernoulli(beta) and each decision depends on at most
// dependency_degree others.
inline DependentFlipStats dependent_flip_variance_check(const Graph& g, double beta, std::uint64_t dependency_degree,
                                                        std::size_t trials, std::uint64_t seed,
                                                        double mixing = 0.5) {
  detail::require_probability(beta, "beta");
  detail::require_probability(mixing, "mixing");
  detail::require(trials >= 100, "trials must be >= 100");
  const std::uint64_t m = g.pairs();
  const std::uint64_t block = dependency_degree + 1;
  std::vector<double> counts(trials);
  for (std::size_t t = 0; t < trials; ++t) {
    Rng rng = make_rng(derive_seed(seed, t));
    std::uint64_t k = 0;
    bool leader = false;
    for (std::uint64_t e = 0; e < m; ++e) {
      const bool own = bernoulli(rng, beta);
      bool decision = own;
      if (e % block == 0) {
        leader = own;
      } else if (bernoulli(rng, mixing)) {
        decision = leader;
      }
      k += decision ? 1 : 0;
    }
    counts[t] = static_cast<double>(k);
  }
  double mean = 0.0;
  for (double c : counts) mean += c;
  mean /= static_cast<double>(trials);
  double ss = 0.0;
  for (double c : counts) ss += (c - mean) * (c - mean);
  return {ss / static_cast<double>(trials - 1), static_cast<double>(m) * beta * (1.0 - beta)};
}

struct TailCheck {
  double empirical_frequency = 0.0;
  double chernoff_bound = 0.0;
};

// Frequency of |K/M - beta| > epsilon over independent flip draws, next to the
// two-sided Hoeffding-Chernoff bound 2 exp(-2 epsilon^2 M).
inline TailCheck flip_rate_tail_check(std::uint64_t pairs, double beta, double epsilon, std::size_t trials,
                                      std::uint64_t seed) {
  detail::require_probability(beta, "beta");
  detail::require(pairs >= 1 && trials >= 1, "need pairs >= 1 and trials >= 1");
  detail::require_positive(epsilon, "epsilon");
  std::size_t exceed = 0;
  for (std::size_t t = 0; t < trials; ++t) {
    Rng rng = make_rng(derive_seed(seed, t));
    std::uint64_t k = 0;
    for_each_bernoulli(0, pairs, beta, rng, [&](std::uint64_t) { ++k; });
    const double rate = static_cast<double>(k) / static_cast<double>(pairs);
    if (std::abs(rate - beta) > epsilon) ++exceed;
  }
  const double m = static_cast<double>(pairs);
  return {static_cast<double>(exceed) / static_cast<double>(trials), 2.0 * std::exp(-2.0 * epsilon * epsilon * m)};
}

// Evidence for a single noise level u shared by both channels of the hybrid
// corruption: flips ~ Binomial(M, beta_ref u) and each noisy feature component
// ~ N(0, 1 + tau_ref u). The true level is u = 1.
struct LevelEvidence {
  std::uint64_t flips = 0;
  std::uint64_t pairs = 0;
  double feature_sum_sq = 0.0;
  std::uint64_t feature_count = 0;
  double beta_ref = 0.2;
  double tau_ref = 0.5;
};

// Posterior moments of the shared noise level under a uniform prior on
// (0, u_max), u_max = min(2, 1 / beta_ref). The grid is centred on the mode with
// a width of twelve Laplace standard deviations either side.
inline PosteriorMoments noise_level_posterior(const LevelEvidence& ev, std::size_t grid_size = 4001) {
  detail::require(ev.flips <= ev.pairs, "flip count exceeds number of pairs");
  detail::require_probability(ev.beta_ref, "beta_ref");
  detail::require_nonnegative(ev.tau_ref, "tau_ref");
  detail::require(ev.beta_ref > 0.0 || ev.tau_ref > 0.0, "noise level is unidentifiable");
  detail::require(ev.pairs > 0 || ev.feature_count > 0, "no evidence");
  detail::require(grid_size >= 1000, "grid_size must be >= 1000");

  const double u_max = ev.beta_ref > 0.0 ? std::min(2.0, 1.0 / ev.beta_ref) : 2.0;
  const double k = static_cast<double>(ev.flips);
  const double rest = static_cast<double>(ev.pairs - ev.flips);
  const double nf = static_cast<double>(ev.feature_count);
  auto loglik = [&](double u) {
    double l = 0.0;
    const double b = ev.beta_ref * u;
    if (k > 0.0) l += k * std::log(b);
    if (rest > 0.0) l += rest * std::log1p(-b);
    if (nf > 0.0) {
      const double v = 1.0 + ev.tau_ref * u;
      l -= 0.5 * ev.feature_sum_sq / v + 0.5 * nf * std::log(v);
    }
    return std::isnan(l) ? -std::numeric_limits<double>::infinity() : l;
  };

  // Coarse scan, then golden-section refinement of the mode.
  const std::size_t scan = 2000;
  double best_u = 0.0, best_l = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < scan; ++i) {
    const double u = u_max * static_cast<double>(i) / static_cast<double>(scan);
    const double l = loglik(u);
    if (l > best_l) {
      best_l = l;
      best_u = u;
    }
  }
  if (!std::isfinite(best_l)) throw NumericError("noise-level likelihood vanishes on its support");
  double lo = std::max(0.0, best_u - u_max / scan), hi = std::min(u_max, best_u + u_max / scan);
  const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
  for (int it = 0; it < 100; ++it) {
    const double c = hi - phi * (hi - lo);
    const double d = lo + phi * (hi - lo);
    if (loglik(c) > loglik(d)) hi = d; else lo = c;
  }
  const double mode = 0.5 * (lo + hi);

  double h = std::max(1e-7, 1e-4 * mode);
  double curv = 0.0;
  for (int it = 0; it < 40; ++it) {
    const double a = std::max(mode - h, 1e-300), b = std::min(mode + h, u_max);
    curv = -(loglik(b) - 2.0 * loglik(mode) + loglik(a)) / (0.5 * (b - a) * 0.5 * (b - a));
    if (std::isfinite(curv) && curv > 0.0) break;
    h *= 4.0;
  }
  const double sd = (std::isfinite(curv) && curv > 0.0) ? 1.0 / std::sqrt(curv) : u_max;
  const double left = std::max(0.0, mode - 12.0 * sd);
  const double right = std::min(u_max, mode + 12.0 * sd);

  std::vector<double> x(grid_size), lw(grid_size);
  for (std::size_t i = 0; i < grid_size; ++i) {
    x[i] = left + (right - left) * static_cast<double>(i) / static_cast<double>(grid_size - 1);
    lw[i] = loglik(x[i]);
  }
  return detail::trapezoid_moments(x, lw);
}

}  // namespace graphdiff
