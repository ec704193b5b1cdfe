#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "graphdiff/error.hpp"
#include "graphdiff/graph.hpp"
#include "graphdiff/graph_gen.hpp"
#include "graphdiff/noise.hpp"
#include "graphdiff/posterior.hpp"
#include "graphdiff/propagation.hpp"
#include "graphdiff/rng.hpp"
#include "graphdiff/stats.hpp"
#include "graphdiff/targets.hpp"

namespace graphdiff {

enum class Experiment { kEfpc, kEtdb, kMdep, kJpc, kJtdb, kJmep, kGammaSweep, kScalefreeProbe };
enum class Family { kEr, kSbm, kPowerlaw };

inline std::string_view to_string(Experiment e) {
  switch (e) {
    case Experiment::kEfpc: return "efpc";
    case Experiment::kEtdb: return "etdb";
    case Experiment::kMdep: return "mdep";
    case Experiment::kJpc: return "jpc";
    case Experiment::kJtdb: return "jtdb";
    case Experiment::kJmep: return "jmep";
    case Experiment::kGammaSweep: return "gamma_sweep";
    case Experiment::kScalefreeProbe: return "scalefree_probe";
  }
  return "?";
}

inline std::string_view to_string(Family f) {
  switch (f) {
    case Family::kEr: return "er";
    case Family::kSbm: return "sbm";
    case Family::kPowerlaw: return "powerlaw";
  }
  return "?";
}

inline std::string_view to_string(MdepMode m) {
  switch (m) {
    case MdepMode::kPerStepRate: return "per_step";
    case MdepMode::kCumulative: return "cumulative";
    case MdepMode::kPathCoupled: return "path_coupled";
  }
  return "?";
}

inline std::string_view to_string(FlipSampler s) { return s == FlipSampler::kBits ? "bits" : "counts"; }

inline FlipSampler parse_sampler(std::string_view s) {
  if (s == "bits") return FlipSampler::kBits;
  if (s == "counts") return FlipSampler::kCounts;
  throw ParameterError("unknown sampler: " + std::string(s));
}

inline Experiment parse_experiment(std::string_view s) {
  for (auto e : {Experiment::kEfpc, Experiment::kEtdb, Experiment::kMdep, Experiment::kJpc, Experiment::kJtdb,
                 Experiment::kJmep, Experiment::kGammaSweep, Experiment::kScalefreeProbe})
    if (to_string(e) == s) return e;
  throw ParameterError("unknown experiment: " + std::string(s));
}

inline Family parse_family(std::string_view s) {
  for (auto f : {Family::kEr, Family::kSbm, Family::kPowerlaw})
    if (to_string(f) == s) return f;
  throw ParameterError("unknown graph family: " + std::string(s));
}

inline MdepMode parse_mdep_mode(std::string_view s) {
  for (auto m : {MdepMode::kPerStepRate, MdepMode::kCumulative, MdepMode::kPathCoupled})
    if (to_string(m) == s) return m;
  throw ParameterError("unknown mdep mode: " + std::string(s));
}

struct SweepConfig {
  Experiment experiment = Experiment::kEfpc;
  Family family = Family::kSbm;
  std::vector<std::uint64_t> nodes;

  SbmSpec sbm{};  // n is taken from the size list
  double p_edge = 0.5;
  double alpha = 2.5;
  std::uint64_t k_min = 2;

  double beta = 0.2;
  std::optional<double> schedule_start{};
  std::optional<double> schedule_end{};
  std::vector<std::uint64_t> steps{1};
  MdepMode mode = MdepMode::kPerStepRate;
  FlipSampler sampler = FlipSampler::kBits;
  double l_max = 1.0;

  std::vector<double> gammas{0.0};
  double tau_x = 0.5;
  std::size_t d_f = 8;
  double sigma_a = 0.5;

  std::size_t trials = 10;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  std::string out;
  std::string json_out;

  static SweepConfig defaults(Experiment e) {
    SweepConfig c;
    c.experiment = e;
    switch (e) {
      case Experiment::kEfpc:
        c.nodes = {50, 100, 150, 200, 250, 300};
        break;
      case Experiment::kEtdb:
        c.nodes = {200, 283, 400, 566, 800, 1131, 1600, 2263, 3200};
        c.trials = 50;
        break;
      case Experiment::kMdep:
        c.nodes = {15, 25, 45, 78, 142, 245, 448, 775, 1415};
        c.beta = 0.1;
        c.steps = {4, 8, 16, 32, 64};
        c.sampler = FlipSampler::kCounts;
        c.trials = 20;
        break;
      case Experiment::kJpc:
      case Experiment::kJtdb:
      case Experiment::kJmep:
        c.family = Family::kEr;
        c.nodes = {64, 100, 201, 317, 633, 1001, 1415};
        c.gammas = {0.7};
        c.trials = 20;
        if (e == Experiment::kJmep) c.steps = {4};
        break;
      case Experiment::kGammaSweep:
        c.nodes = {400};
        c.beta = 0.0;
        c.gammas = {0.0, 0.2, 0.4, 0.6, 0.8, 0.99};
        break;
      case Experiment::kScalefreeProbe:
        c.family = Family::kPowerlaw;
        c.nodes = {1000, 2000, 4000, 8000, 16000};
        c.trials = 5;
        break;
    }
    return c;
  }

  NoiseSchedule schedule(std::uint64_t t) const {
    if (schedule_start || schedule_end)
      return linear_schedule(schedule_start.value_or(beta), schedule_end.value_or(beta), t);
    return NoiseSchedule::constant(beta, t);
  }

  void validate() const {
    detail::require(!nodes.empty(), "size list must be non-empty");
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      detail::require(nodes[i] >= 2, "every size must be >= 2");
      if (i > 0) detail::require(nodes[i] > nodes[i - 1], "size list must be strictly increasing");
    }
    detail::require(trials >= 2, "trials must be >= 2");
    detail::require(threads >= 1, "threads must be >= 1");
    detail::require_probability(beta, "beta");
    if (schedule_start) detail::require_probability(*schedule_start, "schedule_start");
    if (schedule_end) detail::require_probability(*schedule_end, "schedule_end");
    detail::require(!steps.empty(), "steps list must be non-empty");
    for (auto t : steps) detail::require(t >= 1, "steps must be >= 1");
    detail::require(!gammas.empty(), "gamma list must be non-empty");
    for (double g : gammas) detail::require_probability(g, "gamma");
    detail::require_nonnegative(tau_x, "tau_x");
    detail::require_nonnegative(sigma_a, "sigma_a");
    detail::require_probability(p_edge, "p_edge");
    detail::require(l_max >= 1.0 && l_max <= 1.2, "l_max must be in [1, 1.2]");
    detail::require(alpha > 2.0, "alpha must be > 2");
    detail::require_probability(sbm.p_intra, "p_intra");
    detail::require_probability(sbm.p_inter, "p_inter");
    const bool coupled = experiment == Experiment::kJpc || experiment == Experiment::kJtdb ||
                         experiment == Experiment::kJmep || experiment == Experiment::kGammaSweep;
    if (coupled && experiment != Experiment::kJmep) detail::require(d_f >= 1, "dfeat must be >= 1");
    if (experiment == Experiment::kJpc) detail::require(beta > 0.0 || tau_x > 0.0, "jpc needs beta > 0 or tau_x > 0");
  }
};

struct ResultRow {
  std::string experiment;
  std::string family;
  std::uint64_t n = 0;
  std::uint64_t m = 0;
  std::uint64_t d = 0;
  std::uint64_t t = 0;
  double gamma = 0.0;
  double beta = 0.0;
  std::uint64_t seed = 0;
  std::string metric;
  double value = 0.0;

  friend bool operator==(const ResultRow&, const ResultRow&) = default;
};

struct FitSummary {
  std::string experiment;
  std::string metric;
  std::uint64_t t = 0;
  RegressionFit fit{};
  std::size_t n_cells = 0;
  std::size_t n_seeds = 0;
  bool refused = false;
  std::string reason;
};

struct TrendSummary {
  std::vector<double> gammas;
  std::vector<double> mean_total;
  double spearman = 0.0;
  double reduction = 0.0;  // 1 - mean(last) / mean(first)
  bool strictly_decreasing = false;
};

struct SweepResult {
  std::vector<ResultRow> rows;
  std::vector<FitSummary> fits;
  std::optional<TrendSummary> trend;
};

// Metrics eligible for a log-log fit, in reporting order; the first is the
// primary measurand.
inline std::vector<std::string> fit_metrics(Experiment e) {
  switch (e) {
    case Experiment::kEfpc: return {"posterior_var"};
    case Experiment::kEtdb: return {"per_edge_mse", "uncond_norm_sq", "relative_error"};
    case Experiment::kMdep: return {"cumulative_per_edge"};
    case Experiment::kJpc: return {"level_posterior_var"};
    case Experiment::kJtdb: return {"per_edge_mse", "uncond_norm_sq", "relative_error"};
    case Experiment::kJmep: return {"cumulative_per_edge"};
    case Experiment::kGammaSweep: return {};
    case Experiment::kScalefreeProbe: return {"second_moment", "k_max"};
  }
  return {};
}

// Every metric an experiment emits per cell.
inline std::vector<std::string> cell_metrics(Experiment e) {
  switch (e) {
    case Experiment::kEfpc: return {"posterior_var", "posterior_mean", "bias", "var_times_m"};
    case Experiment::kEtdb:
    case Experiment::kJtdb: return {"per_edge_mse", "uncond_norm_sq", "relative_error", "sq_frobenius"};
    case Experiment::kMdep:
    case Experiment::kJmep: return {"cumulative_per_edge", "cumulative", "delta_max", "bound_value"};
    case Experiment::kJpc: return {"level_posterior_var", "level_posterior_mean"};
    case Experiment::kGammaSweep: return {"total", "err_struct_l1", "err_feat_frob"};
    case Experiment::kScalefreeProbe: return {"second_moment", "k_max", "mean_degree"};
  }
  return {};
}

namespace detail {

struct Cell {
  std::size_t size_index = 0;
  std::size_t sub_index = 0;  // steps index (mdep, jmep) or gamma index (gamma sweep)
  std::size_t trial = 0;
};

inline Graph make_graph(const SweepConfig& c, std::uint64_t n, std::uint64_t seed) {
  switch (c.family) {
    case Family::kEr: return generate_er(n, c.p_edge, seed);
    case Family::kSbm: {
      SbmSpec s = c.sbm;
      s.n = n;
      return generate_sbm(s, seed);
    }
    case Family::kPowerlaw: return generate_powerlaw({n, c.alpha, c.k_min}, seed);
  }
  throw ParameterError("unknown graph family");
}

inline bool uses_features(Experiment e) {
  return e == Experiment::kJpc || e == Experiment::kJtdb || e == Experiment::kJmep || e == Experiment::kGammaSweep;
}

inline std::vector<ResultRow> run_cell(const SweepConfig& c, const Cell& cell) {
  const std::uint64_t n = c.nodes[cell.size_index];
  const std::uint64_t trial_seed = c.seed + cell.trial;
  const std::uint64_t graph_seed = derive_seed(c.seed, n, cell.trial, 0);
  const std::uint64_t noise_seed = derive_seed(c.seed, n, cell.trial, 1);
  const Graph g = make_graph(c, n, graph_seed);
  const std::uint64_t m = g.pairs();
  const std::size_t d_f = uses_features(c.experiment) ? c.d_f : 0;
  const std::uint64_t d = m + n * d_f;

  std::vector<ResultRow> out;
  const std::string exp{to_string(c.experiment)};
  const std::string fam{to_string(c.family)};
  auto emit = [&](std::uint64_t t, double gamma, const char* metric, double value) {
    out.push_back({exp, fam, n, m, d, t, gamma, c.beta, trial_seed, metric, value});
  };
  const double label_gamma = c.gammas.front();

  switch (c.experiment) {
    case Experiment::kEfpc: {
      const NoisyGraph noisy = bernoulli_flip(g, c.beta, noise_seed);
      const auto post = beta_posterior(noisy.flip_count, m);
      emit(0, label_gamma, "posterior_var", post.variance());
      emit(0, label_gamma, "posterior_mean", post.mean());
      emit(0, label_gamma, "bias", post.mean() - c.beta);
      emit(0, label_gamma, "var_times_m", post.variance() * static_cast<double>(m));
      break;
    }
    case Experiment::kEtdb: {
      const NoisyGraph noisy = bernoulli_flip(g, c.beta, noise_seed);
      const double p0 = g.density();
      const auto rep = target_deviation(conditional_target(noisy, c.beta, p0), unconditional_target(noisy, p0));
      emit(0, label_gamma, "per_edge_mse", rep.per_edge_mse);
      emit(0, label_gamma, "uncond_norm_sq", rep.uncond_norm_sq);
      emit(0, label_gamma, "relative_error", rep.relative_error);
      emit(0, label_gamma, "sq_frobenius", rep.sq_frobenius);
      break;
    }
    case Experiment::kMdep:
    case Experiment::kJmep: {
      const std::uint64_t t = c.steps[cell.sub_index];
      const NoiseSchedule sched = c.schedule(t);
      const std::uint64_t step_seed = derive_seed(noise_seed, t);
      TrajectoryReport rep;
      if (c.experiment == Experiment::kMdep) {
        MdepOptions opt;
        opt.mode = c.mode;
        opt.sampler = c.sampler;
        opt.l_max = c.l_max;
        rep = mdep_trajectory(g, sched, opt, step_seed);
      } else {
        const FeatureMatrix x0 = gaussian_features(n, d_f, derive_seed(c.seed, n, cell.trial, 2));
        JmepOptions opt;
        opt.cumulative = c.mode == MdepMode::kCumulative;
        opt.sampler = c.sampler;
        opt.l_max = c.l_max;
        rep = jmep_trajectory(g, x0, sched, c.tau_x, opt, step_seed);
      }
      emit(t, label_gamma, "cumulative_per_edge", rep.cumulative_per_edge);
      emit(t, label_gamma, "cumulative", rep.cumulative);
      emit(t, label_gamma, "delta_max", rep.delta_max);
      emit(t, label_gamma, "bound_value", rep.bound_value);
      break;
    }
    case Experiment::kJpc:
    case Experiment::kJtdb: {
      const FeatureMatrix x0 = gaussian_features(n, d_f, derive_seed(c.seed, n, cell.trial, 2));
      const HybridState st = bernoulli_flip_feature_hybrid(g, c.beta, x0, c.tau_x, noise_seed);
      if (c.experiment == Experiment::kJpc) {
        double ss = 0.0;
        for (double v : st.noisy_features.values()) ss += v * v;
        const auto post = noise_level_posterior(
            {st.structure.flip_count, m, ss, static_cast<std::uint64_t>(st.noisy_features.size()), c.beta, c.tau_x});
        emit(0, label_gamma, "level_posterior_var", post.variance);
        emit(0, label_gamma, "level_posterior_mean", post.mean);
      } else {
        const double p0 = g.density();
        const auto rep =
            target_deviation(joint_conditional_target(st, c.beta, p0, c.tau_x), joint_unconditional_target(st, p0));
        emit(0, label_gamma, "per_edge_mse", rep.per_edge_mse);
        emit(0, label_gamma, "uncond_norm_sq", rep.uncond_norm_sq);
        emit(0, label_gamma, "relative_error", rep.relative_error);
        emit(0, label_gamma, "sq_frobenius", rep.sq_frobenius);
      }
      break;
    }
    case Experiment::kGammaSweep: {
      const double gamma = c.gammas[cell.sub_index];
      // Common random numbers: the noise stream does not depend on gamma.
      const FeatureMatrix x0 = gaussian_features(n, d_f, derive_seed(c.seed, n, cell.trial, 2));
      const CoupledParams params{c.sigma_a, std::sqrt(c.tau_x), gamma, d_f};
      const auto err = coupled_reconstruction(g, x0, params, c.schedule(1), noise_seed);
      emit(0, gamma, "total", err.total);
      emit(0, gamma, "err_struct_l1", err.err_struct_l1);
      emit(0, gamma, "err_feat_frob", err.err_feat_frob);
      break;
    }
    case Experiment::kScalefreeProbe: {
      const auto mom = degree_moments(g);
      emit(0, label_gamma, "second_moment", mom.second_moment);
      emit(0, label_gamma, "k_max", static_cast<double>(mom.k_max));
      emit(0, label_gamma, "mean_degree", mom.mean_degree);
      break;
    }
  }
  return out;
}

inline std::vector<Cell> enumerate_cells(const SweepConfig& c) {
  std::size_t subs = 1;
  if (c.experiment == Experiment::kMdep || c.experiment == Experiment::kJmep) subs = c.steps.size();
  if (c.experiment == Experiment::kGammaSweep) subs = c.gammas.size();
  std::vector<Cell> cells;
  cells.reserve(c.nodes.size() * subs * c.trials);
  for (std::size_t s = 0; s < c.nodes.size(); ++s)
    for (std::size_t k = 0; k < subs; ++k)
      for (std::size_t t = 0; t < c.trials; ++t) cells.push_back({s, k, t});
  return cells;
}

inline std::string describe(const SweepConfig& c, const Cell& cell) {
  std::ostringstream os;
  os << to_string(c.experiment) << " cell n=" << c.nodes[cell.size_index] << " trial=" << cell.trial;
  if (c.experiment == Experiment::kMdep || c.experiment == Experiment::kJmep) os << " T=" << c.steps[cell.sub_index];
  if (c.experiment == Experiment::kGammaSweep) os << " gamma=" << c.gammas[cell.sub_index];
  return os.str();
}

inline double abscissa(Experiment e, const ResultRow& r) {
  switch (e) {
    case Experiment::kJpc:
    case Experiment::kJtdb:
    case Experiment::kJmep: return static_cast<double>(r.d);
    case Experiment::kScalefreeProbe: return static_cast<double>(r.n);
    default: return static_cast<double>(r.m);
  }
}

inline bool is_summary_metric(const std::string& metric) {
  return metric.rfind("fit:", 0) == 0 || metric.rfind("trend:", 0) == 0;
}

}  // namespace detail

// Rows are ordered by (n, seed, metric); ties keep their production order.
inline void sort_rows(std::vector<ResultRow>& rows) {
  std::stable_sort(rows.begin(), rows.end(), [](const ResultRow& a, const ResultRow& b) {
    if (a.n != b.n) return a.n < b.n;
    if (a.seed != b.seed) return a.seed < b.seed;
    return a.metric < b.metric;
  });
}

// Log-log fit of the per-size mean of one metric, separately for every T
// present. The confidence half-width comes from fits repeated per seed.
inline std::vector<FitSummary> fit_metric(const std::vector<ResultRow>& rows, Experiment e, const std::string& metric) {
  const auto allowed = fit_metrics(e);
  if (std::find(allowed.begin(), allowed.end(), metric) == allowed.end())
    throw ParameterError("metric '" + metric + "' is not fitted for experiment " + std::string(to_string(e)));

  struct CellAgg {
    double x = 0.0;
    double sum = 0.0;
    std::size_t count = 0;
    std::map<std::uint64_t, double> by_seed;
  };
  std::map<std::uint64_t, std::map<std::uint64_t, CellAgg>> by_t;  // T -> n -> cell
  for (const auto& r : rows) {
    if (r.metric != metric) continue;
    auto& cell = by_t[r.t][r.n];
    cell.x = detail::abscissa(e, r);
    cell.sum += r.value;
    ++cell.count;
    cell.by_seed[r.seed] = r.value;
  }

  std::vector<FitSummary> fits;
  for (const auto& [t, cells] : by_t) {
    FitSummary fs;
    fs.experiment = std::string(to_string(e));
    fs.metric = metric;
    fs.t = t;
    fs.n_cells = cells.size();
    std::vector<Point> pts;
    for (const auto& [n, cell] : cells) pts.push_back({cell.x, cell.sum / static_cast<double>(cell.count)});
    if (pts.size() < 3) {
      fs.refused = true;
      fs.reason = "need at least 3 distinct sizes, have " + std::to_string(pts.size());
      fits.push_back(fs);
      continue;
    }
    try {
      fs.fit = loglog_fit(pts);
    } catch (const std::exception& ex) {
      fs.refused = true;
      fs.reason = ex.what();
      fits.push_back(fs);
      continue;
    }
    std::map<std::uint64_t, std::vector<Point>> per_seed;
    for (const auto& [n, cell] : cells)
      for (const auto& [seed, v] : cell.by_seed) per_seed[seed].push_back({cell.x, v});
    std::vector<double> slopes;
    for (const auto& [seed, p] : per_seed) {
      if (p.size() != cells.size()) continue;
      try {
        slopes.push_back(loglog_fit(p).slope);
      } catch (const std::exception&) {
      }
    }
    fs.n_seeds = slopes.size();
    if (slopes.size() >= 2) fs.fit.slope_ci_halfwidth = confidence_interval(slopes).halfwidth;
    fits.push_back(fs);
  }
  return fits;
}

inline std::vector<FitSummary> compute_fits(const std::vector<ResultRow>& rows, Experiment e) {
  std::vector<FitSummary> all;
  for (const auto& metric : fit_metrics(e)) {
    auto f = fit_metric(rows, e, metric);
    all.insert(all.end(), f.begin(), f.end());
  }
  return all;
}

// Mean total reconstruction error per gamma and its rank correlation with gamma.
inline TrendSummary gamma_trend(const std::vector<ResultRow>& rows) {
  std::map<double, std::pair<double, std::size_t>> acc;
  for (const auto& r : rows) {
    if (r.metric != "total") continue;
    auto& a = acc[r.gamma];
    a.first += r.value;
    ++a.second;
  }
  TrendSummary ts;
  for (const auto& [g, a] : acc) {
    ts.gammas.push_back(g);
    ts.mean_total.push_back(a.first / static_cast<double>(a.second));
  }
  if (ts.gammas.size() >= 2) {
    ts.spearman = spearman(ts.gammas, ts.mean_total);
    ts.reduction = 1.0 - ts.mean_total.back() / ts.mean_total.front();
    ts.strictly_decreasing = true;
    for (std::size_t i = 1; i < ts.mean_total.size(); ++i)
      if (!(ts.mean_total[i] < ts.mean_total[i - 1])) ts.strictly_decreasing = false;
  }
  return ts;
}

inline std::vector<ResultRow> summary_rows(const SweepConfig& c, const SweepResult& res) {
  std::vector<ResultRow> out;
  const std::string exp{to_string(c.experiment)};
  const std::string fam{to_string(c.family)};
  for (const auto& f : res.fits) {
    if (f.refused) continue;
    const std::string base = "fit:" + f.metric + ":";
    out.push_back({exp, fam, 0, 0, 0, f.t, c.gammas.front(), c.beta, c.seed, base + "slope", f.fit.slope});
    out.push_back({exp, fam, 0, 0, 0, f.t, c.gammas.front(), c.beta, c.seed, base + "slope_ci", f.fit.slope_ci_halfwidth});
    out.push_back({exp, fam, 0, 0, 0, f.t, c.gammas.front(), c.beta, c.seed, base + "r2", f.fit.r_squared});
    out.push_back({exp, fam, 0, 0, 0, f.t, c.gammas.front(), c.beta, c.seed, base + "intercept", f.fit.intercept});
  }
  if (res.trend) {
    out.push_back({exp, fam, 0, 0, 0, 0, 0.0, c.beta, c.seed, "trend:spearman", res.trend->spearman});
    out.push_back({exp, fam, 0, 0, 0, 0, 0.0, c.beta, c.seed, "trend:reduction", res.trend->reduction});
  }
  return out;
}

// Runs every (size, T or gamma, trial) cell, in parallel when threads > 1.
// Output does not depend on the thread count.
inline SweepResult run_sweep(const SweepConfig& config) {
  config.validate();
  const auto cells = detail::enumerate_cells(config);
  std::vector<std::vector<ResultRow>> results(cells.size());
  std::vector<std::exception_ptr> errors(cells.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= cells.size()) return;
      try {
        results[i] = detail::run_cell(config, cells[i]);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const unsigned nthreads = std::min<std::size_t>(config.threads, std::max<std::size_t>(cells.size(), 1));
  if (nthreads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned k = 0; k < nthreads; ++k) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (!errors[i]) continue;
    const std::string where = detail::describe(config, cells[i]) + ": ";
    try {
      std::rethrow_exception(errors[i]);
    } catch (const ParameterError& ex) {
      throw ParameterError(where + ex.what());
    } catch (const NumericError& ex) {
      throw NumericError(where + ex.what());
    } catch (const std::exception& ex) {
      throw std::runtime_error(where + ex.what());
    }
  }

  SweepResult res;
  for (auto& r : results) res.rows.insert(res.rows.end(), r.begin(), r.end());
  sort_rows(res.rows);
  res.fits = compute_fits(res.rows, config.experiment);
  if (config.experiment == Experiment::kGammaSweep) res.trend = gamma_trend(res.rows);
  return res;
}

inline constexpr std::string_view kCsvHeader = "experiment,family,n,M,D,T,gamma,beta,seed,metric,value";

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void write_csv(std::ostream& os, const std::vector<ResultRow>& rows) {
  os << kCsvHeader << '\n';
  for (const auto& r : rows) {
    os << r.experiment << ',' << r.family << ',' << r.n << ',' << r.m << ',' << r.d << ',' << r.t << ','
       << format_double(r.gamma) << ',' << format_double(r.beta) << ',' << r.seed << ',' << r.metric << ','
       << format_double(r.value) << '\n';
  }
}

// Writes rows sorted by (n, seed, metric).
inline void export_csv(std::vector<ResultRow> rows, const std::string& path) {
  sort_rows(rows);
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path + " for writing");
  write_csv(os, rows);
  os.flush();
  if (!os) throw IoError("failed writing " + path);
}

inline std::vector<ResultRow> read_csv(std::istream& is, const std::string& source = "<stream>") {
  std::string line;
  if (!std::getline(is, line) || line != kCsvHeader) throw IoError(source + ": missing or unexpected CSV header");
  std::vector<ResultRow> rows;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() != 11) throw IoError(source + ":" + std::to_string(lineno) + ": expected 11 fields");
    try {
      rows.push_back({f[0], f[1], std::stoull(f[2]), std::stoull(f[3]), std::stoull(f[4]), std::stoull(f[5]),
                      std::stod(f[6]), std::stod(f[7]), std::stoull(f[8]), f[9], std::stod(f[10])});
    } catch (const std::logic_error&) {
      throw IoError(source + ":" + std::to_string(lineno) + ": malformed number");
    }
  }
  return rows;
}

inline std::vector<ResultRow> import_csv(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path + " for reading");
  return read_csv(is, path);
}

// Recomputes fits from exported rows, ignoring fit and trend rows.
inline std::vector<FitSummary> refit(const std::vector<ResultRow>& rows, Experiment e) {
  std::vector<ResultRow> cells;
  for (const auto& r : rows)
    if (!detail::is_summary_metric(r.metric)) cells.push_back(r);
  return compute_fits(cells, e);
}

}  // namespace graphdiff
