#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "graphdiff/error.hpp"
#include "graphdiff/graph.hpp"
#include "graphdiff/noise.hpp"
#include "graphdiff/posterior.hpp"
#include "graphdiff/rng.hpp"
#include "graphdiff/targets.hpp"

namespace graphdiff {

struct BoundSpec {
  double l_max = 1.0;
  std::uint64_t steps = 1;
  double delta_max = 0.0;

  void validate() const {
    detail::require(l_max >= 1.0 && l_max - 1.0 <= 0.2, "l_max must be in [1, 1.2]");
    detail::require_nonnegative(delta_max, "delta_max");
  }
};

// (L^T - 1) / (L - 1) * delta, with the limit T * delta at L = 1. The series
// 1 + L + ... + L^(T-1) is summed by Horner's rule: every operation is monotone
// under rounding, so the result is monotone in L, T and delta.
inline double geometric_bound(const BoundSpec& spec) {
  spec.validate();
  if (spec.l_max == 1.0 || spec.steps == 0) return static_cast<double>(spec.steps) * spec.delta_max;
  double series = 1.0;
  for (std::uint64_t k = 1; k < spec.steps; ++k) series = series * spec.l_max + 1.0;
  return series * spec.delta_max;
}

struct TrajectoryReport {
  std::vector<double> per_step_delta;  // squared target gap at each step
  double cumulative = 0.0;
  double cumulative_per_edge = 0.0;    // cumulative / number of compared components
  double delta_max = 0.0;              // max_i per_step_delta / components
  double bound_value = 0.0;            // geometric bound evaluated at delta_max
  std::uint64_t components = 0;

  std::size_t steps() const { return per_step_delta.size(); }
};

// How the state compared at step i is produced.
enum class MdepMode {
  kPerStepRate,  // fresh corruption of A0 at the step's own rate beta_i
  kCumulative,   // fresh corruption of A0 at the composed rate up to step i
  kPathCoupled,  // one forward chain; each step is judged against its predecessor
};

// Pair-level flips, or the equivalent two-binomial draw of the counts the gap
// depends on.
enum class FlipSampler { kBits, kCounts };

struct MdepOptions {
  MdepMode mode = MdepMode::kPerStepRate;
  FlipSampler sampler = FlipSampler::kBits;
  BetaPrior prior{};
  double l_max = 1.0;
  bool force_true_beta = false;     // use the true rate in place of the estimate
  std::optional<double> p0{};       // defaults to the clean graph's density
};

namespace detail {

inline void finish_trajectory(TrajectoryReport& r, std::uint64_t components, double l_max) {
  r.components = components;
  double peak = 0.0;
  for (double d : r.per_step_delta) {
    r.cumulative += d;
    peak = std::max(peak, d);
  }
  const double c = components > 0 ? static_cast<double>(components) : 1.0;
  r.cumulative_per_edge = r.cumulative / c;
  r.delta_max = peak / c;
  r.bound_value = geometric_bound({l_max, r.per_step_delta.size(), r.delta_max});
}

inline double step_level(const NoiseSchedule& schedule, std::size_t step, MdepMode mode) {
  return mode == MdepMode::kCumulative ? compose_flip_prob(schedule, step) : schedule.beta(step);
}

inline FlipCounts flip_step(const Graph& g, double beta, FlipSampler sampler, std::uint64_t seed) {
  if (sampler == FlipSampler::kCounts) return bernoulli_flip_counts(g.edge_count(), g.pairs(), beta, seed);
  const NoisyGraph noisy = bernoulli_flip(g, beta, seed);
  return {noisy.observed_edges(), noisy.flip_count, noisy.source_pairs};
}

inline double plug_in_beta(const FlipCounts& c, const BetaPrior& prior) {
  return beta_posterior(c.flips, c.pairs, prior.alpha0, prior.beta0).mean();
}

}  // namespace detail

inline TrajectoryReport mdep_trajectory(const Graph& g, const NoiseSchedule& schedule, const MdepOptions& opt,
                                        std::uint64_t seed) {
  detail::require_positive(opt.prior.alpha0, "alpha0");
  detail::require_positive(opt.prior.beta0, "beta0");
  const double p0 = opt.p0.value_or(g.density());
  detail::require_probability(p0, "p0");
  const std::uint64_t m = g.pairs();
  TrajectoryReport r;
  r.per_step_delta.reserve(schedule.steps());

  if (opt.mode == MdepMode::kPathCoupled) {
    Graph prev = g;
    std::uint64_t prev_edges = g.edge_count();
    for (std::size_t i = 1; i <= schedule.steps(); ++i) {
      const double beta = schedule.beta(i);
      const std::uint64_t step_seed = derive_seed(derive_seed(seed, i), 0);
      FlipCounts c;
      if (opt.sampler == FlipSampler::kCounts) {
        c = bernoulli_flip_counts(prev_edges, m, beta, step_seed);
      } else {
        NoisyGraph next = bernoulli_flip(prev, beta, step_seed);
        c = {next.observed_edges(), next.flip_count, m};
        prev = Graph(std::move(next.adjacency));
      }
      const double prior_density = m > 0 ? static_cast<double>(prev_edges) / static_cast<double>(m) : 0.0;
      const double beta_hat = opt.force_true_beta ? beta : detail::plug_in_beta(c, opt.prior);
      r.per_step_delta.push_back(edge_gap_from_counts(c.observed_edges, m, beta, beta_hat, prior_density));
      prev_edges = c.observed_edges;
    }
  } else {
    for (std::size_t i = 1; i <= schedule.steps(); ++i) {
      const double level = detail::step_level(schedule, i, opt.mode);
      const FlipCounts c = detail::flip_step(g, level, opt.sampler, derive_seed(derive_seed(seed, i), 0));
      const double beta_hat = opt.force_true_beta ? level : detail::plug_in_beta(c, opt.prior);
      r.per_step_delta.push_back(edge_gap_from_counts(c.observed_edges, m, level, beta_hat, p0));
    }
  }
  detail::finish_trajectory(r, m, opt.l_max);
  return r;
}

// Convenience overload with default options.
inline TrajectoryReport mdep_trajectory(const Graph& g, const NoiseSchedule& schedule, std::uint64_t seed) {
  return mdep_trajectory(g, schedule, MdepOptions{}, seed);
}

struct JmepOptions {
  bool cumulative = false;  // compose the structural rate and add feature variances over steps
  FlipSampler sampler = FlipSampler::kBits;
  BetaPrior prior{};
  double l_max = 1.0;
  bool force_true_noise_level = false;
  std::optional<double> p0{};
};

// Joint structure and feature version of the per-step gap. The structural part
// draws from the same streams as mdep_trajectory, so an empty feature block
// reproduces it exactly.
inline TrajectoryReport jmep_trajectory(const Graph& g, const FeatureMatrix& x0, const NoiseSchedule& schedule,
                                        double tau_x, const JmepOptions& opt, std::uint64_t seed) {
  detail::require_nonnegative(tau_x, "tau_x");
  detail::require(x0.size() == 0 || x0.rows() == g.nodes(), "feature matrix must have n rows");
  const double p0 = opt.p0.value_or(g.density());
  detail::require_probability(p0, "p0");
  const std::uint64_t m = g.pairs();
  const std::uint64_t feat = x0.size();
  TrajectoryReport r;
  r.per_step_delta.reserve(schedule.steps());
  const MdepMode mode = opt.cumulative ? MdepMode::kCumulative : MdepMode::kPerStepRate;

  for (std::size_t i = 1; i <= schedule.steps(); ++i) {
    const double level = detail::step_level(schedule, i, mode);
    const double tau = opt.cumulative ? tau_x * static_cast<double>(i) : tau_x;
    // Same stream split as bernoulli_flip_feature_hybrid.
    const std::uint64_t step_seed = derive_seed(seed, i);
    const FlipCounts c = detail::flip_step(g, level, opt.sampler, derive_seed(step_seed, 0));
    const double beta_hat = opt.force_true_noise_level ? level : detail::plug_in_beta(c, opt.prior);
    double delta = edge_gap_from_counts(c.observed_edges, m, level, beta_hat, p0);
    if (feat != 0) {
      const FeatureMatrix noisy = gaussian_feature_noise(x0, tau, derive_seed(step_seed, 1));
      const double tau_hat = opt.force_true_noise_level || feat < 2 ? tau : estimate_tau_x(noisy);
      const double k = 1.0 / (1.0 + tau) - 1.0 / (1.0 + tau_hat);
      double ss = 0.0;
      for (double v : noisy.values()) ss += v * v;
      delta += k * k * ss;
    }
    r.per_step_delta.push_back(delta);
  }
  detail::finish_trajectory(r, m + feat, opt.l_max);
  return r;
}

struct ReconstructionError {
  double err_struct_l1 = 0.0;
  double err_feat_frob = 0.0;
  double total = 0.0;
};

// One composite corruption at the schedule's terminal flip level followed by the
// coupled Gaussian perturbation, then a plug-in reconstruction:
//  - features: tau from the pooled variance, X0 estimated by the shrinker;
//  - structure: the shared component is predicted from the feature residuals,
//    regressed out of A~, and each pair's flipped bit is classified by a
//    two-component Gaussian mixture on what remains. The edge posterior then
//    undoes the flips at the estimated rate and is thresholded at 0.5.
inline ReconstructionError coupled_reconstruction(const Graph& g, const FeatureMatrix& x0,
                                                  const CoupledParams& params, const NoiseSchedule& schedule,
                                                  std::uint64_t seed) {
  params.validate();
  const std::uint64_t n = g.nodes();
  const std::uint64_t m = g.pairs();
  detail::require(m >= 2, "reconstruction needs at least two pairs");
  const double flip = compose_flip_prob(schedule, schedule.steps());
  const NoisyGraph flipped = bernoulli_flip(g, flip, derive_seed(seed, 0));
  const CoupledState st = coupled_corrupt(flipped.as_graph(), x0, params, derive_seed(seed, 1));

  const double tau_hat = estimate_tau_x(st.noisy_features);
  const FeatureMatrix x_hat = feature_target(st.noisy_features, tau_hat);
  const double eta_scale = std::sqrt(tau_hat) / (1.0 + tau_hat);
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(params.d_f));
  std::vector<double> summary(n, 0.0);
  for (std::uint64_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (double v : st.noisy_features.row(i)) s += v;
    summary[i] = s * eta_scale * inv_sqrt_d;
  }

  // Least-squares slope of A~ on the predicted shared term c_ij = (m_i + m_j) / 2.
  double sc = 0.0, sa = 0.0, scc = 0.0, sca = 0.0;
  for (std::uint64_t i = 0, idx = 0; i + 1 < n; ++i) {
    for (std::uint64_t j = i + 1; j < n; ++j, ++idx) {
      const double c = 0.5 * (summary[i] + summary[j]);
      const double a = st.noisy_structure[idx];
      sc += c;
      sa += a;
      scc += c * c;
      sca += c * a;
    }
  }
  const double md = static_cast<double>(m);
  const double var_c = scc / md - (sc / md) * (sc / md);
  const double cov_ca = sca / md - (sc / md) * (sa / md);
  const double slope = var_c > 1e-12 ? cov_ca / var_c : 0.0;

  std::vector<double> resid(m);
  double sr = 0.0, srr = 0.0;
  for (std::uint64_t i = 0, idx = 0; i + 1 < n; ++i) {
    for (std::uint64_t j = i + 1; j < n; ++j, ++idx) {
      const double r = st.noisy_structure[idx] - slope * 0.5 * (summary[i] + summary[j]);
      resid[idx] = r;
      sr += r;
      srr += r * r;
    }
  }
  const double q = std::clamp(sr / md, 0.0, 1.0);
  const double var_r = srr / md - (sr / md) * (sr / md);
  const double w = std::max(0.0, var_r - q * (1.0 - q));

  const double p0 = g.density();
  const double denom = 1.0 - 2.0 * p0;
  const double beta_hat = std::abs(denom) > 1e-12 ? std::clamp((q - p0) / denom, 0.0, 0.5) : 0.0;
  const double post1 = edge_posterior_conditional(true, beta_hat, p0);
  const double post0 = edge_posterior_conditional(false, beta_hat, p0);

  ReconstructionError err;
  const PairBits& clean = g.adjacency();
  for (std::uint64_t idx = 0; idx < m; ++idx) {
    const double r = resid[idx];
    double p_one;
    if (w <= 1e-12) {
      p_one = r > 0.5 ? 1.0 : 0.0;
    } else {
      // log odds of B = 1 versus B = 0 under N(1, w) and N(0, w)
      const double log_odds = (r - 0.5) / w + std::log(std::max(q, 1e-300)) - std::log(std::max(1.0 - q, 1e-300));
      p_one = 1.0 / (1.0 + std::exp(-log_odds));
    }
    const double post = p_one * post1 + (1.0 - p_one) * post0;
    const bool est = post > 0.5;
    if (est != clean.test(idx)) err.err_struct_l1 += 1.0;
  }
  double ss = 0.0;
  const auto xh = x_hat.values();
  const auto xc = x0.values();
  for (std::size_t k = 0; k < xh.size(); ++k) ss += (xh[k] - xc[k]) * (xh[k] - xc[k]);
  err.err_feat_frob = std::sqrt(ss);
  err.total = err.err_struct_l1 + err.err_feat_frob;
  return err;
}

}  // namespace graphdiff
