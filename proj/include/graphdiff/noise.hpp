#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "graphdiff/error.hpp"
#include "graphdiff/graph.hpp"
#include "graphdiff/rng.hpp"

namespace graphdiff {

// Per-step flip probabilities beta_1..beta_T.
class NoiseSchedule {
 public:
  explicit NoiseSchedule(std::vector<double> betas) : betas_(std::move(betas)) {
    detail::require(!betas_.empty(), "noise schedule needs at least one step");
    for (double b : betas_) detail::require_probability(b, "beta");
  }

  static NoiseSchedule constant(double beta, std::size_t steps) {
    detail::require(steps >= 1, "noise schedule needs at least one step");
    return NoiseSchedule(std::vector<double>(steps, beta));
  }

  std::size_t steps() const { return betas_.size(); }
  double beta(std::size_t step) const { return betas_.at(step - 1); }  // 1-based
  std::span<const double> betas() const { return betas_; }

 private:
  std::vector<double> betas_;
};

// Linear interpolation from beta_start to beta_end, both endpoints included.
inline NoiseSchedule linear_schedule(double beta_start, double beta_end, std::size_t steps) {
  detail::require(steps >= 1, "schedule length must be >= 1");
  detail::require_probability(beta_start, "beta_start");
  detail::require_probability(beta_end, "beta_end");
  std::vector<double> betas(steps);
  if (steps == 1) {
    betas[0] = beta_start;
  } else {
    const double span = beta_end - beta_start;
    for (std::size_t i = 0; i < steps; ++i)
      betas[i] = beta_start + span * static_cast<double>(i) / static_cast<double>(steps - 1);
    betas.back() = beta_end;
  }
  return NoiseSchedule(std::move(betas));
}

// Probability that an entry differs from its clean value after steps 1..upto
// of symmetric flips. Propagates the two-state (same, different) chain; the
// result equals (1 - prod(1 - 2 beta_i)) / 2.
inline double compose_flip_prob(const NoiseSchedule& schedule, std::size_t upto) {
  detail::require(upto >= 1 && upto <= schedule.steps(), "step index out of range");
  double same = 1.0;
  double diff = 0.0;
  for (std::size_t i = 0; i < upto; ++i) {
    const double b = schedule.betas()[i];
    const double next_same = same * (1.0 - b) + diff * b;
    const double next_diff = same * b + diff * (1.0 - b);
    same = next_same;
    diff = next_diff;
  }
  return diff;
}

// Flip probability after time t of a rate-lambda Poisson toggle process.
inline double poisson_flip_prob(double lambda, double t) {
  detail::require_nonnegative(lambda, "lambda");
  detail::require_nonnegative(t, "t");
  return -0.5 * std::expm1(-2.0 * lambda * t);
}

struct NoisyGraph {
  PairBits adjacency;
  std::uint64_t flip_count = 0;  // pairs differing from the source graph
  std::uint64_t source_pairs = 0;

  std::uint64_t nodes() const { return adjacency.nodes(); }
  std::uint64_t observed_edges() const { return adjacency.count(); }
  Graph as_graph() const { return Graph(adjacency); }
};

inline NoisyGraph bernoulli_flip(const Graph& g, double beta, std::uint64_t seed) {
  detail::require_probability(beta, "beta");
  NoisyGraph out{g.adjacency(), 0, g.pairs()};
  Rng rng = make_rng(seed);
  for_each_bernoulli(0, g.pairs(), beta, rng, [&](std::uint64_t idx) {
    out.adjacency.flip(idx);
    ++out.flip_count;
  });
  return out;
}

// Summary of one Bernoulli flip pass: what the target computations consume.
struct FlipCounts {
  std::uint64_t observed_edges = 0;
  std::uint64_t flips = 0;
  std::uint64_t pairs = 0;
};

// Same law as counting the outcome of bernoulli_flip, without touching
// individual pairs: flips among the edges ~ Bin(E, beta), among the non-edges
// ~ Bin(M - E, beta).
inline FlipCounts bernoulli_flip_counts(std::uint64_t edges, std::uint64_t pairs, double beta, std::uint64_t seed) {
  detail::require_probability(beta, "beta");
  detail::require(edges <= pairs, "edge count exceeds number of pairs");
  Rng rng = make_rng(seed);
  std::binomial_distribution<std::uint64_t> on(edges, beta);
  std::binomial_distribution<std::uint64_t> off(pairs - edges, beta);
  const std::uint64_t removed = edges > 0 ? on(rng) : 0;
  const std::uint64_t added = pairs > edges ? off(rng) : 0;
  return {edges - removed + added, removed + added, pairs};
}

// (1 - t) x0 + t U with U ~ Beta(alpha_u, beta_u).
inline double beta_channel(double x0, double t, double alpha_u, double beta_u, std::uint64_t seed) {
  detail::require_positive(alpha_u, "alpha_u");
  detail::require_positive(beta_u, "beta_u");
  detail::require_probability(x0, "x0");
  detail::require_probability(t, "t");
  Rng rng = make_rng(seed);
  std::gamma_distribution<double> ga(alpha_u, 1.0);
  std::gamma_distribution<double> gb(beta_u, 1.0);
  const double x = ga(rng);
  const double y = gb(rng);
  const double u = x / (x + y);
  return (1.0 - t) * x0 + t * u;
}

inline void require_simplex(std::span<const double> p, const char* name) {
  detail::require(!p.empty(), std::string(name) + " must be non-empty");
  double s = 0.0;
  for (double v : p) {
    detail::require(v >= 0.0 && std::isfinite(v), std::string(name) + " entries must be >= 0");
    s += v;
  }
  detail::require(std::abs(s - 1.0) <= 1e-12, std::string(name) + " must sum to 1");
}

// Keeps the category with probability 1 - t, otherwise resamples from base_pi.
inline std::size_t multinomial_channel(std::size_t category, double t, std::span<const double> base_pi,
                                       std::uint64_t seed) {
  require_simplex(base_pi, "base_pi");
  detail::require(category < base_pi.size(), "category out of range");
  detail::require_probability(t, "t");
  Rng rng = make_rng(seed);
  if (!bernoulli(rng, t)) return category;
  std::discrete_distribution<std::size_t> resample(base_pi.begin(), base_pi.end());
  return resample(rng);
}

struct CoupledParams {
  double sigma_a = 0.0;
  double sigma_x = 0.0;
  double gamma = 0.0;
  std::size_t d_f = 1;

  void validate() const {
    detail::require_nonnegative(sigma_a, "sigma_a");
    detail::require_nonnegative(sigma_x, "sigma_x");
    detail::require_probability(gamma, "gamma");
    detail::require(d_f >= 1, "d_f must be >= 1");
  }
};

struct CoupledState {
  FeatureMatrix noisy_features;
  std::vector<double> noisy_structure;  // one real value per unordered pair
  std::vector<double> latent_summaries;  // s_i = sum_m eta_i[m] / sqrt(d_f)
  std::uint64_t nodes = 0;

  double structure(std::uint64_t i, std::uint64_t j) const {
    return i == j ? 0.0 : noisy_structure[pair_index(i, j, nodes)];
  }
};

// X~_i = X_i + sigma_x eta_i
// A~_ij = A_ij + sigma_a (gamma (s_i + s_j)/2 + sqrt(1 - gamma^2) xi_ij)
inline CoupledState coupled_corrupt(const Graph& g, const FeatureMatrix& x0, const CoupledParams& params,
                                    std::uint64_t seed) {
  params.validate();
  detail::require(x0.rows() == g.nodes() && x0.cols() == params.d_f,
                  "feature matrix must be n x d_f");
  const std::uint64_t n = g.nodes();
  const std::size_t d = params.d_f;
  Rng rng = make_rng(seed);
  std::normal_distribution<double> normal;

  CoupledState st;
  st.nodes = n;
  st.noisy_features = x0;
  st.latent_summaries.assign(n, 0.0);
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));
  for (std::uint64_t i = 0; i < n; ++i) {
    double sum = 0.0;
    auto row = st.noisy_features.row(i);
    for (std::size_t m = 0; m < d; ++m) {
      const double eta = normal(rng);
      row[m] += params.sigma_x * eta;
      sum += eta;
    }
    st.latent_summaries[i] = sum * inv_sqrt_d;
  }

  const double shared = params.sigma_a * params.gamma * 0.5;
  const double idio = params.sigma_a * std::sqrt(1.0 - params.gamma * params.gamma);
  st.noisy_structure.resize(g.pairs());
  std::uint64_t idx = 0;
  for (std::uint64_t i = 0; i + 1 < n; ++i) {
    for (std::uint64_t j = i + 1; j < n; ++j, ++idx) {
      const double a = g.adjacency().test(idx) ? 1.0 : 0.0;
      const double xi = normal(rng);
      st.noisy_structure[idx] =
          a + shared * (st.latent_summaries[i] + st.latent_summaries[j]) + idio * xi;
    }
  }
  return st;
}

struct CoupledMoments {
  double var_struct = 0.0;          // marginal variance of one structural perturbation
  double var_feat_component = 0.0;  // variance of one feature perturbation
  double min_eig_lower = 0.0;       // lower bound on the smallest covariance eigenvalue
  bool degenerate = false;
};

inline CoupledMoments coupled_noise_moments(const CoupledParams& params) {
  params.validate();
  const double sa2 = params.sigma_a * params.sigma_a;
  const double g2 = params.gamma * params.gamma;
  CoupledMoments m;
  m.var_struct = sa2 * (1.0 - g2 / 2.0);
  m.var_feat_component = params.sigma_x * params.sigma_x;
  m.min_eig_lower = std::min(sa2 * (1.0 - g2), m.var_feat_component);
  m.degenerate = !(m.min_eig_lower > 0.0);
  return m;
}

// Standard normal node features.
inline FeatureMatrix gaussian_features(std::uint64_t n, std::size_t d_f, std::uint64_t seed) {
  FeatureMatrix x(n, d_f);
  Rng rng = make_rng(seed);
  std::normal_distribution<double> normal;
  for (double& v : x.values()) v = normal(rng);
  return x;
}

// Adds independent N(0, tau_x) noise to every feature component.
inline FeatureMatrix gaussian_feature_noise(const FeatureMatrix& x0, double tau_x, std::uint64_t seed) {
  detail::require_nonnegative(tau_x, "tau_x");
  FeatureMatrix out = x0;
  if (tau_x == 0.0) return out;
  Rng rng = make_rng(seed);
  std::normal_distribution<double> normal(0.0, std::sqrt(tau_x));
  for (double& v : out.values()) v += normal(rng);
  return out;
}

struct HybridState {
  NoisyGraph structure;
  FeatureMatrix noisy_features;
};

// Bernoulli flips on the structure and additive Gaussian noise on features,
// drawn from independent streams of the same seed.
inline HybridState bernoulli_flip_feature_hybrid(const Graph& g, double beta, const FeatureMatrix& x0,
                                                 double tau_x, std::uint64_t seed) {
  detail::require(x0.rows() == g.nodes() || x0.size() == 0, "feature matrix must have n rows");
  detail::require_nonnegative(tau_x, "tau_x");
  return {bernoulli_flip(g, beta, derive_seed(seed, 0)),
          gaussian_feature_noise(x0, tau_x, derive_seed(seed, 1))};
}

}  // namespace graphdiff
