#pragma once

#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "graphdiff/harness.hpp"
#include "graphdiff/noise.hpp"
#include "graphdiff/targets.hpp"

namespace graphdiff::cli {

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> parts;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) throw ParameterError("empty entry in list '" + v + "'");
    parts.push_back(item);
  }
  if (parts.empty()) throw ParameterError("empty list");
  return parts;
}

inline std::uint64_t parse_uint(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto* end = v.data() + v.size();
  const auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc{} || ptr != end) throw ParameterError(key + ": expected a non-negative integer, got '" + v + "'");
  return out;
}

inline double parse_double(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double out = 0.0;
  try {
    out = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != v.size()) throw ParameterError(key + ": expected a number, got '" + v + "'");
  return out;
}

}  // namespace detail

inline const std::map<std::string, std::string>& setting_help() {
  static const std::map<std::string, std::string> help = {
      {"nodes", "comma-separated graph sizes"},
      {"family", "er | sbm | powerlaw"},
      {"beta", "per-step flip probability"},
      {"schedule-start", "first step flip probability of a linear schedule"},
      {"schedule-end", "last step flip probability of a linear schedule"},
      {"steps", "comma-separated step counts T"},
      {"mode", "per_step | cumulative | path_coupled"},
      {"sampler", "bits | counts"},
      {"l-max", "Lipschitz constant of the per-step map"},
      {"gamma", "comma-separated structure/feature coupling values"},
      {"tau-x", "feature noise variance"},
      {"dfeat", "feature dimension"},
      {"sigma-a", "structural Gaussian noise scale"},
      {"p-edge", "Erdos-Renyi edge probability"},
      {"p-intra", "SBM within-block edge probability"},
      {"p-inter", "SBM between-block edge probability"},
      {"blocks", "SBM block count"},
      {"alpha", "power-law degree exponent"},
      {"kmin", "power-law minimum degree"},
      {"trials", "graphs per size"},
      {"seed", "master seed (GRAPHDIFF_SEED overrides)"},
      {"threads", "worker threads; output does not depend on it"},
      {"out", "CSV output path"},
      {"json-out", "JSON fit summary path"}};
  return help;
}

// Keys accepted in config files; the same names are used as --flags.
inline const std::vector<std::string>& setting_keys() {
  static const std::vector<std::string> keys = {
      "nodes", "family", "beta",   "schedule-start", "schedule-end", "steps",  "mode",  "sampler", "l-max",
      "gamma", "tau-x",  "dfeat",  "sigma-a",        "p-edge",       "p-intra", "p-inter", "blocks",
      "alpha", "kmin",   "trials", "seed",           "threads",      "out",    "json-out"};
  return keys;
}

inline void apply_setting(SweepConfig& c, std::string key, const std::string& raw) {
  for (char& ch : key)
    if (ch == '_') ch = '-';
  const std::string v = detail::trim(raw);
  if (key == "nodes") {
    c.nodes.clear();
    for (const auto& s : detail::split_list(v)) c.nodes.push_back(detail::parse_uint(key, s));
  } else if (key == "family") {
    c.family = parse_family(v);
  } else if (key == "beta") {
    c.beta = detail::parse_double(key, v);
  } else if (key == "schedule-start") {
    c.schedule_start = detail::parse_double(key, v);
  } else if (key == "schedule-end") {
    c.schedule_end = detail::parse_double(key, v);
  } else if (key == "steps") {
    c.steps.clear();
    for (const auto& s : detail::split_list(v)) c.steps.push_back(detail::parse_uint(key, s));
  } else if (key == "mode") {
    c.mode = parse_mdep_mode(v);
  } else if (key == "sampler") {
    c.sampler = parse_sampler(v);
  } else if (key == "l-max") {
    c.l_max = detail::parse_double(key, v);
  } else if (key == "gamma") {
    c.gammas.clear();
    for (const auto& s : detail::split_list(v)) c.gammas.push_back(detail::parse_double(key, s));
  } else if (key == "tau-x") {
    c.tau_x = detail::parse_double(key, v);
  } else if (key == "dfeat") {
    c.d_f = detail::parse_uint(key, v);
  } else if (key == "sigma-a") {
    c.sigma_a = detail::parse_double(key, v);
  } else if (key == "p-edge") {
    c.p_edge = detail::parse_double(key, v);
  } else if (key == "p-intra") {
    c.sbm.p_intra = detail::parse_double(key, v);
  } else if (key == "p-inter") {
    c.sbm.p_inter = detail::parse_double(key, v);
  } else if (key == "blocks") {
    c.sbm.k = detail::parse_uint(key, v);
  } else if (key == "alpha") {
    c.alpha = detail::parse_double(key, v);
  } else if (key == "kmin") {
    c.k_min = detail::parse_uint(key, v);
  } else if (key == "trials") {
    c.trials = detail::parse_uint(key, v);
  } else if (key == "seed") {
    c.seed = detail::parse_uint(key, v);
  } else if (key == "threads") {
    c.threads = static_cast<unsigned>(detail::parse_uint(key, v));
  } else if (key == "out") {
    c.out = v;
  } else if (key == "json-out") {
    c.json_out = v;
  } else {
    throw ParameterError("unknown key '" + key + "'");
  }
}

// key = value lines; '#' starts a comment. Values override those already in c.
inline void load_config_stream(std::istream& is, SweepConfig& c, const std::string& source) {
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string body = detail::trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    const std::string where = source + ":" + std::to_string(lineno) + ": ";
    if (eq == std::string::npos) throw ParameterError(where + "expected key = value");
    const std::string key = detail::trim(body.substr(0, eq));
    const std::string value = detail::trim(body.substr(eq + 1));
    if (key.empty()) throw ParameterError(where + "missing key");
    if (key == "experiment") {
      if (value != to_string(c.experiment))
        throw ParameterError(where + "config is for experiment '" + value + "'");
      continue;
    }
    try {
      apply_setting(c, key, value);
    } catch (const ParameterError& ex) {
      throw ParameterError(where + ex.what());
    }
  }
}

inline SweepConfig load_config(const std::string& path, SweepConfig base) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open config file " + path);
  load_config_stream(is, base, path);
  return base;
}

inline std::string dump_config(const SweepConfig& c) {
  auto join_u = [](const std::vector<std::uint64_t>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
    return s;
  };
  std::string gam;
  for (std::size_t i = 0; i < c.gammas.size(); ++i) gam += (i ? "," : "") + format_double(c.gammas[i]);
  std::ostringstream os;
  os << "experiment = " << to_string(c.experiment) << '\n'
     << "nodes = " << join_u(c.nodes) << '\n'
     << "family = " << to_string(c.family) << '\n'
     << "beta = " << format_double(c.beta) << '\n';
  if (c.schedule_start) os << "schedule-start = " << format_double(*c.schedule_start) << '\n';
  if (c.schedule_end) os << "schedule-end = " << format_double(*c.schedule_end) << '\n';
  os << "steps = " << join_u(c.steps) << '\n'
     << "mode = " << to_string(c.mode) << '\n'
     << "sampler = " << to_string(c.sampler) << '\n'
     << "l-max = " << format_double(c.l_max) << '\n'
     << "gamma = " << gam << '\n'
     << "tau-x = " << format_double(c.tau_x) << '\n'
     << "dfeat = " << c.d_f << '\n'
     << "sigma-a = " << format_double(c.sigma_a) << '\n'
     << "p-edge = " << format_double(c.p_edge) << '\n'
     << "p-intra = " << format_double(c.sbm.p_intra) << '\n'
     << "p-inter = " << format_double(c.sbm.p_inter) << '\n'
     << "blocks = " << c.sbm.k << '\n'
     << "alpha = " << format_double(c.alpha) << '\n'
     << "kmin = " << c.k_min << '\n'
     << "trials = " << c.trials << '\n'
     << "seed = " << c.seed << '\n'
     << "threads = " << c.threads << '\n';
  if (!c.out.empty()) os << "out = " << c.out << '\n';
  if (!c.json_out.empty()) os << "json-out = " << c.json_out << '\n';
  return os.str();
}

inline nlohmann::json fits_to_json(const SweepResult& res) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& f : res.fits) {
    nlohmann::json j = {{"experiment", f.experiment}, {"metric", f.metric}, {"n_cells", f.n_cells}};
    if (f.t != 0) j["T"] = f.t;
    if (f.refused) {
      j["refused"] = f.reason;
    } else {
      j["slope"] = f.fit.slope;
      j["ci"] = f.fit.slope_ci_halfwidth;
      j["r2"] = f.fit.r_squared;
    }
    arr.push_back(j);
  }
  if (res.trend) {
    arr.push_back({{"experiment", "gamma_sweep"},
                   {"metric", "total"},
                   {"spearman", res.trend->spearman},
                   {"reduction", res.trend->reduction},
                   {"gammas", res.trend->gammas},
                   {"mean_total", res.trend->mean_total},
                   {"n_cells", res.trend->gammas.size()}});
  }
  return arr;
}

inline std::string summary_line(const FitSummary& f) {
  std::string name = f.metric;
  if (f.t != 0 && f.experiment != "efpc") name += "@T=" + std::to_string(f.t);
  if (f.refused) return "metric=" + name + " fit refused: " + f.reason;
  char buf[160];
  std::snprintf(buf, sizeof buf, "metric=%s slope=%.4f±%.4f r2=%.4f", name.c_str(), f.fit.slope,
                f.fit.slope_ci_halfwidth, f.fit.r_squared);
  return buf;
}

inline void report(const SweepConfig& c, const SweepResult& res, std::ostream& out) {
  for (const auto& f : res.fits) out << summary_line(f) << '\n';
  if (res.trend) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "metric=total spearman=%.4f reduction=%.4f", res.trend->spearman,
                  res.trend->reduction);
    out << buf << '\n';
  }
  if (c.experiment == Experiment::kEfpc) {
    // Per-size constant M Var and posterior-mean bias at the largest size.
    double vm = 0.0, bias = 0.0;
    std::size_t k = 0;
    for (const auto& r : res.rows) {
      if (r.n != c.nodes.back()) continue;
      if (r.metric == "var_times_m") vm += r.value, ++k;
      if (r.metric == "bias") bias += r.value;
    }
    if (k > 0) {
      char buf[160];
      std::snprintf(buf, sizeof buf, "largest n=%llu: M*var=%.5f bias=%.2e",
                    static_cast<unsigned long long>(c.nodes.back()), vm / k, bias / k);
      out << buf << '\n';
    }
  }
}

inline int run_channels(const SweepConfig& c, double lambda, std::ostream& out) {
  const NoiseSchedule sched = c.schedule(c.steps.front());
  char buf[200];
  for (std::size_t i = 1; i <= sched.steps(); ++i) {
    std::snprintf(buf, sizeof buf, "step=%zu beta=%.6g composed=%.17g", i, sched.beta(i), compose_flip_prob(sched, i));
    out << buf << '\n';
  }
  std::vector<double> grid(201);
  for (std::size_t k = 0; k < grid.size(); ++k) grid[k] = 2.0 * static_cast<double>(k) / 200.0;
  struct EdgeIn {
    bool observed;
    double p0;
  };
  std::vector<EdgeIn> edge_inputs;
  for (double p0 : {0.3, 0.5, 0.7})
    for (bool obs : {false, true}) edge_inputs.push_back({obs, p0});
  const double pois = lipschitz_probe(
      [&](double t, const EdgeIn& in) {
        return edge_posterior_conditional(in.observed, poisson_flip_prob(lambda, t), in.p0);
      },
      std::span<const double>(grid), std::span<const EdgeIn>(edge_inputs));
  std::snprintf(buf, sizeof buf, "channel=poisson lambda=%.6g lipschitz=%.6g", lambda, pois);
  out << buf << '\n';

  std::vector<double> unit(101);
  for (std::size_t k = 0; k < unit.size(); ++k) unit[k] = static_cast<double>(k) / 100.0;
  struct MultiIn {
    std::size_t k, j;
  };
  const std::vector<double> p = {0.5, 0.3, 0.2};
  const std::vector<double> pi = {1.0 / 3, 1.0 / 3, 1.0 / 3};
  std::vector<MultiIn> multi_inputs;
  for (std::size_t k = 0; k < 3; ++k)
    for (std::size_t j = 0; j < 3; ++j) multi_inputs.push_back({k, j});
  const double multi = lipschitz_probe(
      [&](double t, const MultiIn& in) { return multinomial_posterior(in.k, t, p, pi)[in.j]; },
      std::span<const double>(unit), std::span<const MultiIn>(multi_inputs));
  std::snprintf(buf, sizeof buf, "channel=multinomial lipschitz=%.6g", multi);
  out << buf << '\n';

  const std::vector<double> ys = {0.0, 0.25, 0.5, 0.75, 1.0};
  const double beta_noise = lipschitz_probe(
      [&](double t, const double& y) { return beta_noise_posterior_mean(y, t, 2.0, 2.0, 1.0, 1.0); },
      std::span<const double>(unit), std::span<const double>(ys));
  std::snprintf(buf, sizeof buf, "channel=beta_noise lipschitz=%.6g", beta_noise);
  out << buf << '\n';
  return 0;
}

// Returns the process exit status: 0 success, 2 parameter error, 1 runtime error.
inline int parse_and_dispatch(int argc, const char* const* argv, std::ostream& out = std::cout,
                              std::ostream& err = std::cerr) {
  CLI::App app{"Noise-level inference simulations for graph diffusion"};
  app.require_subcommand(1, 1);

  struct Sub {
    std::string name;
    Experiment experiment;
    CLI::App* app = nullptr;
  };
  std::vector<Sub> subs = {{"efpc", Experiment::kEfpc},     {"etdb", Experiment::kEtdb},
                           {"mdep", Experiment::kMdep},     {"jpc", Experiment::kJpc},
                           {"jtdb", Experiment::kJtdb},     {"jmep", Experiment::kJmep},
                           {"gamma", Experiment::kGammaSweep}, {"scalefree", Experiment::kScalefreeProbe},
                           {"channels", Experiment::kEfpc}};
  const std::map<std::string, std::string> help = {
      {"efpc", "flip-rate posterior variance versus graph size"},
      {"etdb", "conditional versus unconditional target deviation"},
      {"mdep", "multi-step accumulated target gap"},
      {"jpc", "shared noise-level posterior variance, structure plus features"},
      {"jtdb", "joint target deviation, structure plus features"},
      {"jmep", "joint multi-step accumulated gap"},
      {"gamma", "reconstruction error across coupling strengths"},
      {"scalefree", "degree moments of power-law graphs"},
      {"channels", "schedule composition and channel Lipschitz probes"}};

  std::map<std::string, std::string> raw;
  std::map<std::string, CLI::Option*> opts;
  std::string config_path, dump_path;
  double lambda = 1.0;
  for (auto& s : subs) {
    s.app = app.add_subcommand(s.name, help.at(s.name));
    for (const auto& key : setting_keys()) opts[s.name + "/" + key] = s.app->add_option("--" + key, raw[s.name + "/" + key], setting_help().at(key));
    s.app->add_option("--config", config_path, "key = value file; flags override it");
    s.app->add_option("--dump-config", dump_path, "write the effective configuration to this path");
    if (s.name == "channels") s.app->add_option("--lambda", lambda, "Poisson toggle rate");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n' << app.help();
    return 2;
  }

  const Sub* chosen = nullptr;
  for (const auto& s : subs)
    if (s.app->parsed()) chosen = &s;

  try {
    SweepConfig c = SweepConfig::defaults(chosen->experiment);
    if (!config_path.empty()) c = load_config(config_path, c);
    for (const auto& key : setting_keys()) {
      const auto* o = opts.at(chosen->name + "/" + key);
      if (o->count() > 0) apply_setting(c, key, raw.at(chosen->name + "/" + key));
    }
    if (const char* env = std::getenv("GRAPHDIFF_SEED"); env != nullptr && *env != '\0')
      c.seed = detail::parse_uint("GRAPHDIFF_SEED", env);
    c.validate();
    if (!dump_path.empty()) {
      std::ofstream os(dump_path);
      if (!os) throw IoError("cannot open " + dump_path + " for writing");
      os << dump_config(c);
    }

    if (chosen->name == "channels") {
      graphdiff::detail::require_nonnegative(lambda, "lambda");
      return run_channels(c, lambda, out);
    }

    SweepResult res = run_sweep(c);
    if (!c.out.empty()) {
      std::vector<ResultRow> rows = res.rows;
      const auto extra = summary_rows(c, res);
      rows.insert(rows.end(), extra.begin(), extra.end());
      export_csv(std::move(rows), c.out);
    }
    if (!c.json_out.empty()) {
      std::ofstream os(c.json_out);
      if (!os) throw IoError("cannot open " + c.json_out + " for writing");
      os << fits_to_json(res).dump(2) << '\n';
    }
    report(c, res, out);
    return 0;
  } catch (const ParameterError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace graphdiff::cli
