#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "graphdiff/graph_gen.hpp"
#include "graphdiff/noise.hpp"
#include "graphdiff/posterior.hpp"

using namespace graphdiff;

TEST(BetaPosterior, NoDataIsThePrior) {
  const auto p = beta_posterior(0, 0);
  EXPECT_EQ(p.mean(), 0.5);
  EXPECT_DOUBLE_EQ(p.variance(), 1.0 / 12.0);
}

TEST(BetaPosterior, ExactRationalMoments) {
  const auto p = beta_posterior(2, 10);
  EXPECT_EQ(p.a, 3.0);
  EXPECT_EQ(p.b, 9.0);
  EXPECT_EQ(p.mean(), 0.25);
  EXPECT_NEAR(p.variance(), 27.0 / 1872.0, 1e-17);
  EXPECT_THROW(beta_posterior(11, 10), ParameterError);
  EXPECT_THROW(beta_posterior(1, 10, 0.0, 1.0), ParameterError);
}

TEST(PosteriorMeanEstimator, Examples) {
  EXPECT_EQ(posterior_mean_estimator(0, 0), 0.5);
  EXPECT_EQ(posterior_mean_estimator(2, 10), 0.25);
  EXPECT_LT(posterior_mean_estimator(1000, 1000), 1.0);
  EXPECT_EQ(posterior_mean_estimator(1000, 1000), 1001.0 / 1002.0);
}

TEST(VarianceAsymptotic, Examples) {
  EXPECT_EQ(variance_asymptotic(0.5, 100), 0.0025);
  EXPECT_THROW(variance_asymptotic(0.0, 10), ParameterError);
  EXPECT_THROW(variance_asymptotic(1.0, 10), ParameterError);
  EXPECT_THROW(variance_asymptotic(0.3, 0), ParameterError);
  for (double b : {0.1, 0.3, 0.45, 0.55, 0.9}) EXPECT_LT(variance_asymptotic(b, 50), variance_asymptotic(0.5, 50));
}

TEST(VarianceAsymptotic, ProductWithMIsTheConstant) {
  // Exact at decades; the division and multiplication round trip can cost one
  // ulp for other M.
  for (std::uint64_t m = 1; m <= 10000000; m *= 10) EXPECT_EQ(variance_asymptotic(0.2, m) * static_cast<double>(m), 0.16);
  const double ulp = std::nextafter(0.16, 1.0) - 0.16;
  for (std::uint64_t m = 1; m <= 200000; ++m)
    ASSERT_LE(std::abs(variance_asymptotic(0.2, m) * static_cast<double>(m) - 0.16), ulp) << m;
}

TEST(GridOracle, MatchesConjugateClosedForm) {
  Rng rng = make_rng(1);
  for (int k = 0; k < 200; ++k) {
    const std::uint64_t m = rng() % 1001;
    const std::uint64_t f = m ? rng() % (m + 1) : 0;
    const auto exact = beta_posterior(f, m);
    const auto grid = posterior_grid_oracle(f, m, BetaPrior{});
    ASSERT_NEAR(grid.mean, exact.mean(), 1e-6) << f << "/" << m;
    ASSERT_NEAR(grid.variance, exact.variance(), 1e-6) << f << "/" << m;
  }
}

TEST(GridOracle, NonUniformBetaPrior) {
  const auto grid = posterior_grid_oracle(7, 40, BetaPrior{2.0, 3.0});
  const auto exact = beta_posterior(7, 40, 2.0, 3.0);
  EXPECT_NEAR(grid.mean, exact.mean(), 1e-8);
  EXPECT_NEAR(grid.variance, exact.variance(), 1e-8);
}

TEST(GridOracle, ZeroFlipsAtLargeM) {
  EXPECT_NEAR(posterior_grid_oracle(0, 1000, BetaPrior{}).mean, 1.0 / 1002.0, 1e-6);
}

TEST(GridOracle, TruncatedUniformPriorDoesNotSlowConcentration) {
  const auto prior = TabulatedPrior::truncated_uniform(0.05, 0.95);
  for (std::uint64_t m : {10u, 100u, 1000u}) {
    const auto trunc = posterior_grid_oracle(m / 2, m, prior);
    EXPECT_LE(trunc.variance, beta_posterior(m / 2, m).variance() + 1e-4);
  }
}

TEST(GridOracle, RejectsBadInputs) {
  EXPECT_THROW(posterior_grid_oracle(1, 10, BetaPrior{}, 10), ParameterError);
  EXPECT_THROW(posterior_grid_oracle(11, 10, BetaPrior{}), ParameterError);
  TabulatedPrior bad{{0.0, 1.0}, {2.0, 2.0}};
  EXPECT_THROW(posterior_grid_oracle(1, 10, bad), ParameterError);
  TabulatedPrior unsorted{{0.0, 0.6, 0.4, 1.0}, {1.0, 1.0, 1.0, 1.0}};
  EXPECT_THROW(unsorted.validate(), ParameterError);
  // All prior mass where the likelihood vanishes.
  TabulatedPrior edge{{0.0, 1e-9, 1e-9, 1.0}, {2e9 / 2.0 * 2.0 / 2.0, 0.0, 0.0, 0.0}};
  edge.density[0] = 2e9;
  EXPECT_THROW(posterior_grid_oracle(1000, 1000, edge), NumericError);
}

TEST(EstimateTauX, RecoversNoiseVariance) {
  const FeatureMatrix x0 = gaussian_features(12500, 8, 1);  // 1e5 components
  const double tau = estimate_tau_x(gaussian_feature_noise(x0, 0.5, 2));
  EXPECT_GE(tau, 0.48);
  EXPECT_LE(tau, 0.52);
  const double tau0 = estimate_tau_x(x0);
  EXPECT_LE(tau0, 3.0 * std::sqrt(2.0 / 1e5));
}

TEST(EstimateTauX, ClampsAndValidates) {
  EXPECT_EQ(estimate_tau_x(FeatureMatrix(10, 2, 3.0)), 0.0);
  EXPECT_THROW(estimate_tau_x(FeatureMatrix(1, 1)), ParameterError);
}

TEST(ScaleFreeExponent, Values) {
  EXPECT_EQ(scale_free_exponent(3.0), 0.5);
  EXPECT_GT(scale_free_exponent(200.0), 0.99);
  EXPECT_LT(scale_free_exponent(2.01), 0.01);
  EXPECT_THROW(scale_free_exponent(2.0), ParameterError);
  double prev = 0.0;
  for (double a = 2.05; a < 50.0; a += 0.05) {
    const double v = scale_free_exponent(a);
    EXPECT_GT(v, prev);
    prev = v;
  }
}

TEST(DependentFlips, IndependentCaseMatchesBinomial) {
  const auto s = dependent_flip_variance_check(Graph::empty(60), 0.2, 0, 4000, 3);
  EXPECT_GE(s.ratio(), 0.9);
  EXPECT_LE(s.ratio(), 1.1);
}

TEST(DependentFlips, BoundedInflation) {
  const auto s = dependent_flip_variance_check(Graph::empty(60), 0.2, 4, 2000, 4);
  EXPECT_GE(s.ratio(), 1.0);
  EXPECT_LE(s.ratio(), 1.0 + 2.0 * 4);
  // Blocks of five with copy probability 1/2: 1 + (2*4*0.5 + 4*3*0.25) / 5 = 2.4.
  EXPECT_NEAR(s.ratio(), 2.4, 0.3);
}

TEST(DependentFlips, VarianceScalesWithM) {
  const auto small = dependent_flip_variance_check(Graph::empty(60), 0.2, 4, 3000, 5);   // M = 1770
  const auto large = dependent_flip_variance_check(Graph::empty(85), 0.2, 4, 3000, 6);   // M = 3570
  const double ratio = large.empirical_var / small.empirical_var;
  EXPECT_GE(ratio, 1.7);
  EXPECT_LE(ratio, 2.3);
  EXPECT_THROW(dependent_flip_variance_check(Graph::empty(10), 0.2, 1, 50, 1), ParameterError);
}

TEST(Concentration, ScaledVarianceOfFlipRateApproachesConstant) {
  const std::uint64_t m = 10000;
  const std::size_t trials = 4000;
  double s = 0, ss = 0, bias = 0;
  for (std::size_t t = 0; t < trials; ++t) {
    const auto c = bernoulli_flip_counts(0, m, 0.2, derive_seed(21, t));
    const double r = static_cast<double>(c.flips) / static_cast<double>(m);
    s += r, ss += r * r;
    bias += beta_posterior(c.flips, m).mean() - 0.2;
  }
  const double mean = s / trials;
  const double var = (ss - trials * mean * mean) / (trials - 1);
  EXPECT_NEAR(var * static_cast<double>(m), 0.16, 0.01);
  EXPECT_LE(std::abs(bias / trials), 2e-3);
}

TEST(Concentration, TailFrequencyBelowChernoffBound) {
  for (double eps : {0.01, 0.02}) {
    const auto tc = flip_rate_tail_check(10000, 0.2, eps, 2000, 31);
    EXPECT_LE(tc.empirical_frequency, tc.chernoff_bound);
    EXPECT_NEAR(tc.chernoff_bound, 2.0 * std::exp(-2.0 * eps * eps * 10000), 1e-15);
  }
}

TEST(NoiseLevelPosterior, StructureOnlyMatchesBetaPosterior) {
  // With no features the level is beta / beta_ref, a rescaled Beta posterior.
  const LevelEvidence ev{200, 1000, 0.0, 0, 0.2, 0.5};
  const auto post = noise_level_posterior(ev);
  const auto beta = beta_posterior(200, 1000);
  EXPECT_NEAR(post.mean, beta.mean() / 0.2, 1e-6);
  EXPECT_NEAR(post.variance, beta.variance() / 0.04, 1e-3 * beta.variance() / 0.04);
}

TEST(NoiseLevelPosterior, VarianceMatchesFisherInformation) {
  const std::uint64_t m = 100000, nf = 40000;
  const double beta = 0.2, tau = 0.5;
  const LevelEvidence ev{static_cast<std::uint64_t>(beta * m), m, (1.0 + tau) * static_cast<double>(nf), nf, beta, tau};
  const auto post = noise_level_posterior(ev);
  const double info = static_cast<double>(m) * beta / (1.0 - beta) +
                      0.5 * static_cast<double>(nf) * (tau / (1.0 + tau)) * (tau / (1.0 + tau));
  EXPECT_NEAR(post.mean, 1.0, 0.01);
  EXPECT_NEAR(post.variance * info, 1.0, 0.05);
}

TEST(NoiseLevelPosterior, Validation) {
  EXPECT_THROW(noise_level_posterior({5, 4, 0.0, 0, 0.2, 0.5}), ParameterError);
  EXPECT_THROW(noise_level_posterior({0, 0, 0.0, 0, 0.2, 0.5}), ParameterError);
  EXPECT_THROW(noise_level_posterior({1, 10, 0.0, 0, 0.0, 0.0}), ParameterError);
}
