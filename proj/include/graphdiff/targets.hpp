#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "graphdiff/error.hpp"
#include "graphdiff/graph.hpp"
#include "graphdiff/noise.hpp"
#include "graphdiff/posterior.hpp"

namespace graphdiff {

// Denoising target over all unordered pairs, plus an optional n x d_f feature
// block. Edge values are stored packed in pair_index order, so symmetry and the
// zero diagonal hold by construction.
struct TargetField {
  std::uint64_t nodes = 0;
  std::vector<double> edge_probs;
  FeatureMatrix features;

  std::uint64_t pairs() const { return edge_probs.size(); }
  bool has_features() const { return features.size() != 0; }
  double edge(std::uint64_t i, std::uint64_t j) const {
    return i == j ? 0.0 : edge_probs[pair_index(i, j, nodes)];
  }
};

struct DeviationReport {
  double sq_frobenius = 0.0;
  double per_edge_mse = 0.0;    // sq_frobenius / number of compared components
  double uncond_norm_sq = 0.0;  // squared norm of the unconditional target
  double relative_error = 0.0;  // per_edge_mse / uncond_norm_sq
};

// P(A0(e) = 1 | observed bit, beta) with prior P(A0(e) = 1) = p0. A 0/0 case
// (only possible when p0 is 0 or 1) returns p0.
inline double edge_posterior_conditional(bool observed, double beta, double p0) {
  detail::require_probability(beta, "beta");
  detail::require_probability(p0, "p0");
  const double stay = 1.0 - beta;
  const double num = observed ? stay * p0 : beta * p0;
  const double other = observed ? beta * (1.0 - p0) : stay * (1.0 - p0);
  const double den = num + other;
  return den > 0.0 ? num / den : p0;
}

namespace detail {

inline TargetField field_from_rule(const PairBits& observed, double r1, double r0) {
  TargetField f;
  f.nodes = observed.nodes();
  f.edge_probs.assign(observed.size(), r0);
  if (r1 != r0) observed.for_each_set([&](std::uint64_t idx) { f.edge_probs[idx] = r1; });
  return f;
}

}  // namespace detail

inline TargetField conditional_target(const NoisyGraph& noisy, double beta, double p0) {
  const double r1 = edge_posterior_conditional(true, beta, p0);
  const double r0 = edge_posterior_conditional(false, beta, p0);
  return detail::field_from_rule(noisy.adjacency, r1, r0);
}

// Posterior mean of the flip rate from the observed flip count.
inline double plug_in_beta(const NoisyGraph& noisy, const BetaPrior& prior = {}) {
  return beta_posterior(noisy.flip_count, noisy.source_pairs, prior.alpha0, prior.beta0).mean();
}

// Conditional rule evaluated at the posterior-mean flip rate.
inline TargetField unconditional_target(const NoisyGraph& noisy, double p0, const BetaPrior& prior = {}) {
  return conditional_target(noisy, plug_in_beta(noisy, prior), p0);
}

// Conditional rule averaged over the Beta posterior of the flip rate, by
// trapezoid quadrature on a uniform grid.
inline TargetField unconditional_target_mixture(const NoisyGraph& noisy, double p0, const BetaPrior& prior = {},
                                                std::size_t grid_size = 20001) {
  detail::require(grid_size >= 1000, "grid_size must be >= 1000");
  const auto post = beta_posterior(noisy.flip_count, noisy.source_pairs, prior.alpha0, prior.beta0);
  std::vector<double> x(grid_size), lw(grid_size);
  const double h = 1.0 / static_cast<double>(grid_size - 1);
  double peak = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < grid_size; ++i) {
    const double b = static_cast<double>(i) * h;
    x[i] = b;
    double l = 0.0;
    if (post.a != 1.0) l += (post.a - 1.0) * std::log(b);
    if (post.b != 1.0) l += (post.b - 1.0) * std::log1p(-b);
    lw[i] = std::isnan(l) ? -std::numeric_limits<double>::infinity() : l;
    peak = std::max(peak, lw[i]);
  }
  double z = 0.0, r1 = 0.0, r0 = 0.0;
  for (std::size_t i = 0; i < grid_size; ++i) {
    if (!std::isfinite(lw[i])) continue;
    const double w = ((i == 0 || i + 1 == grid_size) ? 0.5 : 1.0) * std::exp(lw[i] - peak);
    z += w;
    r1 += w * edge_posterior_conditional(true, x[i], p0);
    r0 += w * edge_posterior_conditional(false, x[i], p0);
  }
  if (!(z > 0.0)) throw NumericError("flip-rate posterior is not normalisable on the grid");
  return detail::field_from_rule(noisy.adjacency, r1 / z, r0 / z);
}

// Posterior mean of X0 under X0 ~ N(0, 1) and additive N(0, tau) noise.
inline FeatureMatrix feature_target(const FeatureMatrix& noisy_features, double tau) {
  detail::require_nonnegative(tau, "tau");
  FeatureMatrix out = noisy_features;
  const double shrink = 1.0 / (1.0 + tau);
  for (double& v : out.values()) v *= shrink;
  return out;
}

// Structure block from the edge rule at (beta, p0), feature block from the
// Gaussian shrinker at tau.
inline TargetField joint_conditional_target(const HybridState& state, double beta, double p0, double tau) {
  TargetField f = conditional_target(state.structure, beta, p0);
  if (state.noisy_features.size() != 0) f.features = feature_target(state.noisy_features, tau);
  return f;
}

// Plug-in estimates: beta from the flip count, tau from the feature variance.
inline TargetField joint_unconditional_target(const HybridState& state, double p0, const BetaPrior& prior = {}) {
  TargetField f = unconditional_target(state.structure, p0, prior);
  if (state.noisy_features.size() >= 2)
    f.features = feature_target(state.noisy_features, estimate_tau_x(state.noisy_features));
  else if (state.noisy_features.size() != 0)
    f.features = state.noisy_features;
  return f;
}

// Sums over unordered pairs once, plus every feature component if present.
inline DeviationReport target_deviation(const TargetField& cond, const TargetField& uncond) {
  detail::require(cond.nodes == uncond.nodes && cond.pairs() == uncond.pairs(), "target fields differ in shape");
  detail::require(cond.features.rows() == uncond.features.rows() &&
                      cond.features.cols() == uncond.features.cols(),
                  "feature blocks differ in shape");
  DeviationReport r;
  for (std::size_t e = 0; e < cond.edge_probs.size(); ++e) {
    const double d = cond.edge_probs[e] - uncond.edge_probs[e];
    r.sq_frobenius += d * d;
    r.uncond_norm_sq += uncond.edge_probs[e] * uncond.edge_probs[e];
  }
  const auto fc = cond.features.values();
  const auto fu = uncond.features.values();
  for (std::size_t k = 0; k < fc.size(); ++k) {
    const double d = fc[k] - fu[k];
    r.sq_frobenius += d * d;
    r.uncond_norm_sq += fu[k] * fu[k];
  }
  const double count = static_cast<double>(cond.pairs() + fc.size());
  r.per_edge_mse = count > 0.0 ? r.sq_frobenius / count : 0.0;
  r.relative_error = r.uncond_norm_sq > 0.0 ? r.per_edge_mse / r.uncond_norm_sq : 0.0;
  return r;
}

// Squared gap between the edge rules at two flip rates without materialising
// the fields: every observed 1 carries the same gap, and likewise every 0.
inline double edge_gap_from_counts(std::uint64_t observed_ones, std::uint64_t pairs, double beta_a, double beta_b,
                                   double p0) {
  detail::require(observed_ones <= pairs, "observed edge count exceeds number of pairs");
  const double d1 = edge_posterior_conditional(true, beta_a, p0) - edge_posterior_conditional(true, beta_b, p0);
  const double d0 = edge_posterior_conditional(false, beta_a, p0) - edge_posterior_conditional(false, beta_b, p0);
  return static_cast<double>(observed_ones) * d1 * d1 + static_cast<double>(pairs - observed_ones) * d0 * d0;
}

// Normalised Bayes posterior over K categories after the multinomial channel:
// P(A0 = j | obs = k) is proportional to ((1 - t) [j == k] + t pi_k) p_j.
// A zero evidence term returns the prior.
inline std::vector<double> multinomial_posterior(std::size_t observed_k, double t, std::span<const double> prior_p,
                                                 std::span<const double> base_pi) {
  require_simplex(prior_p, "prior_p");
  require_simplex(base_pi, "base_pi");
  detail::require(prior_p.size() == base_pi.size(), "prior_p and base_pi must have the same length");
  detail::require(observed_k < prior_p.size(), "observed category out of range");
  detail::require_probability(t, "t");
  const std::size_t k = prior_p.size();
  std::vector<double> post(k);
  double z = 0.0;
  for (std::size_t j = 0; j < k; ++j) {
    post[j] = ((j == observed_k ? 1.0 - t : 0.0) + t * base_pi[observed_k]) * prior_p[j];
    z += post[j];
  }
  if (!(z > 0.0)) return {prior_p.begin(), prior_p.end()};
  for (double& v : post) v /= z;
  return post;
}

// Posterior-mean expression of the Beta-noise channel, evaluated as printed;
// it reduces to y_t only when a0 + b0 = 1.
inline double beta_noise_posterior_mean(double y_t, double t, double a0, double b0, double alpha_u, double beta_u) {
  detail::require_positive(a0, "a0");
  detail::require_positive(b0, "b0");
  detail::require_positive(alpha_u, "alpha_u");
  detail::require_positive(beta_u, "beta_u");
  detail::require_probability(t, "t");
  return ((1.0 - t) * y_t * a0 + t * alpha_u) / ((1.0 - t) * (a0 + b0) + t * (alpha_u + beta_u));
}

// Largest finite-difference slope |R(t_{k+1}) - R(t_k)| / (t_{k+1} - t_k) of
// target(t, input) over adjacent grid points and all inputs.
template <class Target, class Input>
double lipschitz_probe(Target&& target, std::span<const double> t_grid, std::span<const Input> inputs) {
  detail::require(t_grid.size() >= 10, "t_grid needs at least 10 points");
  for (std::size_t k = 1; k < t_grid.size(); ++k)
    detail::require(t_grid[k] > t_grid[k - 1], "t_grid must be strictly increasing");
  double best = 0.0;
  for (const Input& in : inputs) {
    double prev = target(t_grid[0], in);
    for (std::size_t k = 1; k < t_grid.size(); ++k) {
      const double cur = target(t_grid[k], in);
      best = std::max(best, std::abs(cur - prev) / (t_grid[k] - t_grid[k - 1]));
      prev = cur;
    }
  }
  return best;
}

}  // namespace graphdiff
