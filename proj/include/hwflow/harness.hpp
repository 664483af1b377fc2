// Configurable Monte Carlo experiments turning the limit theorems into
// statistical checks: quenched invariance principle, quenched-mean
// fluctuations, current fluctuations, two-point covariance, local-time laws,
// and return-probability decay.
//
// Reproducibility: replicate r of experiment E always derives its generator
// from (master_seed, r) alone; per-replicate outputs land in slot r of a
// preallocated buffer and are reduced in index order with compensated
// summation, so payloads are bit-identical for any --jobs value.
#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "hwflow/analytics.hpp"
#include "hwflow/discrete.hpp"
#include "hwflow/gaussian_field.hpp"
#include "hwflow/io.hpp"
#include "hwflow/parallel.hpp"
#include "hwflow/stats.hpp"
#include "hwflow/sticky.hpp"

namespace hwflow {

enum class ExperimentKind {
  kQip,
  kQuenchedMean,
  kCurrent,
  kTwoPointCov,
  kLocalTime,
  kReturnDecay
};

enum class ModelKind { kDiscrete, kContinuum };

struct Assertion {
  std::string name;
  std::string stat;
  std::string op;          // "le", "ge", "abs_le", "within"
  double value = 0.0;      // rhs for le/ge/abs_le, or target for "within"
  std::string target_stat; // optional: target taken from another stat
  std::string tol_stat;    // optional: tolerance taken from a stat (e.g. an SE)
  double tol = 0.0;        // constant tolerance when tol_stat empty
  double mult = 1.0;       // multiplier on the tolerance
};

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::kTwoPointCov;
  ModelKind model = ModelKind::kContinuum;
  EnvDistribution dist;
  StickyParams params;
  std::vector<long> scales;
  int replicates = 1000;
  int n_envs = 20;
  std::uint64_t master_seed = 1;
  std::vector<FluctuationPoint> points;
  double dt = 1e-4;
  double bandwidth = 1e-3;
  double horizon = 1.0;
  double t_block = 1.0;
  int n_blocks = 64;
  int fit_k_lo = 8;
  int fit_k_hi = 64;
  std::vector<double> u_levels{0.1, 0.3, 0.6};
  InitialProfile profile;
  bool noise_on = true;
  int jobs = 0;  // 0 = library default
  std::vector<Assertion> assertions;

  static ExperimentConfig from_json(const json& j);
  json to_json() const;
};

struct AssertionResult {
  std::string name;
  bool pass = false;
  double observed = 0.0;
  double bound_lo = 0.0;
  double bound_hi = 0.0;
};

struct EnsembleResult {
  std::string experiment;
  std::vector<std::pair<std::string, double>> stats;
  std::vector<AssertionResult> assertions;
  std::map<std::string, std::vector<std::string>> table_columns;
  std::map<std::string, std::vector<std::vector<double>>> tables;
  json metadata;

  double stat(const std::string& name) const {
    for (const auto& [k, v] : stats)
      if (k == name) return v;
    throw std::domain_error("unknown stat: " + name);
  }
  bool has_stat(const std::string& name) const {
    for (const auto& [k, v] : stats)
      if (k == name) return true;
    return false;
  }
  void put(const std::string& name, double v) { stats.emplace_back(name, v); }
  bool all_pass() const {
    for (const auto& a : assertions)
      if (!a.pass) return false;
    return true;
  }

  json to_json() const {
    json js;
    js["experiment"] = experiment;
    json st = json::object();
    for (const auto& [k, v] : stats) st[k] = v;
    js["stats"] = st;
    json as = json::array();
    for (const auto& a : assertions)
      as.push_back({{"name", a.name},
                    {"pass", a.pass},
                    {"observed", a.observed},
                    {"bound_lo", a.bound_lo},
                    {"bound_hi", a.bound_hi}});
    js["assertions"] = as;
    js["metadata"] = metadata;
    return js;
  }
};

// ---------------------------------------------------------------------------
// config (de)serialization
// ---------------------------------------------------------------------------

namespace detail {

inline std::string experiment_name(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::kQip: return "qip";
    case ExperimentKind::kQuenchedMean: return "quenched_mean";
    case ExperimentKind::kCurrent: return "current";
    case ExperimentKind::kTwoPointCov: return "two_point_cov";
    case ExperimentKind::kLocalTime: return "local_time";
    case ExperimentKind::kReturnDecay: return "return_decay";
  }
  return "?";
}

inline ExperimentKind experiment_from_name(const std::string& s) {
  if (s == "qip") return ExperimentKind::kQip;
  if (s == "quenched_mean") return ExperimentKind::kQuenchedMean;
  if (s == "current") return ExperimentKind::kCurrent;
  if (s == "two_point_cov") return ExperimentKind::kTwoPointCov;
  if (s == "local_time") return ExperimentKind::kLocalTime;
  if (s == "return_decay") return ExperimentKind::kReturnDecay;
  throw std::domain_error("unknown experiment: " + s);
}

inline EnvDistribution dist_from_json(const json& j) {
  EnvDistribution d;
  const std::string kind = j.value("kind", "beta");
  if (kind == "deterministic") {
    d.kind = EnvKind::kDeterministic;
    d.p = j.value("p", 0.5);
  } else if (kind == "beta") {
    d.kind = EnvKind::kBeta;
    d.a = j.value("a", 2.0);
    d.b = j.value("b", 2.0);
  } else if (kind == "two_point") {
    d.kind = EnvKind::kTwoPoint;
    d.p = j.value("p", 0.1);
    d.q = j.value("q", 0.9);
    d.weight = j.value("weight", 0.5);
  } else {
    throw std::domain_error("unknown distribution kind: " + kind);
  }
  d.validate();
  return d;
}

inline json dist_to_json(const EnvDistribution& d) {
  switch (d.kind) {
    case EnvKind::kDeterministic: return {{"kind", "deterministic"}, {"p", d.p}};
    case EnvKind::kBeta: return {{"kind", "beta"}, {"a", d.a}, {"b", d.b}};
    case EnvKind::kTwoPoint:
      return {{"kind", "two_point"}, {"p", d.p}, {"q", d.q}, {"weight", d.weight}};
  }
  return {};
}

inline InitialProfile profile_from_json(const json& j) {
  InitialProfile p;
  const std::string kind = j.value("kind", "zero");
  if (kind == "zero")
    p.kind = ProfileKind::kZero;
  else if (kind == "linear")
    p.kind = ProfileKind::kLinear;
  else if (kind == "sine")
    p.kind = ProfileKind::kSine;
  else
    throw std::domain_error("unknown profile kind: " + kind);
  p.slope = j.value("slope", 0.0);
  p.amplitude = j.value("amplitude", 0.0);
  p.freq = j.value("freq", 1.0);
  p.x0 = j.value("x0", 0.0);
  return p;
}

inline json profile_to_json(const InitialProfile& p) {
  json j;
  switch (p.kind) {
    case ProfileKind::kZero: j["kind"] = "zero"; break;
    case ProfileKind::kLinear: j["kind"] = "linear"; break;
    case ProfileKind::kSine: j["kind"] = "sine"; break;
  }
  j["slope"] = p.slope;
  j["amplitude"] = p.amplitude;
  j["freq"] = p.freq;
  j["x0"] = p.x0;
  return j;
}

}  // namespace detail

inline ExperimentConfig ExperimentConfig::from_json(const json& j) {
  ExperimentConfig c;
  c.experiment = detail::experiment_from_name(j.at("experiment").get<std::string>());
  c.model = j.value("model", "continuum") == std::string("discrete") ? ModelKind::kDiscrete
                                                                     : ModelKind::kContinuum;
  if (j.contains("dist")) c.dist = detail::dist_from_json(j["dist"]);
  c.params.nu = j.value("nu", 1.0);
  c.params.beta = j.value("beta", 0.0);
  c.params.validate();
  if (j.contains("scales")) c.scales = j["scales"].get<std::vector<long>>();
  c.replicates = j.value("replicates", 1000);
  require(c.replicates >= 100, "ExperimentConfig: replicates must be >= 100");
  c.n_envs = j.value("n_envs", 20);
  c.master_seed = j.value("master_seed", static_cast<std::uint64_t>(1));
  if (j.contains("points"))
    for (const auto& p : j["points"])
      c.points.push_back({p.value("t", 1.0), p.value("r", 0.0)});
  c.dt = j.value("dt", 1e-4);
  c.bandwidth = j.value("bandwidth", 1e-3);
  c.horizon = j.value("horizon", 1.0);
  c.t_block = j.value("t_block", 1.0);
  c.n_blocks = j.value("n_blocks", 64);
  c.fit_k_lo = j.value("fit_k_lo", 8);
  c.fit_k_hi = j.value("fit_k_hi", 64);
  if (j.contains("u_levels")) c.u_levels = j["u_levels"].get<std::vector<double>>();
  if (j.contains("profile")) c.profile = detail::profile_from_json(j["profile"]);
  c.noise_on = j.value("noise", true);
  c.jobs = j.value("jobs", 0);
  if (j.contains("assertions")) {
    for (const auto& a : j["assertions"]) {
      Assertion as;
      as.name = a.value("name", "");
      as.stat = a.at("stat").get<std::string>();
      as.op = a.value("op", "within");
      as.value = a.value("value", 0.0);
      as.target_stat = a.value("target_stat", "");
      as.tol_stat = a.value("tol_stat", "");
      as.tol = a.value("tol", 0.0);
      as.mult = a.value("mult", 1.0);
      c.assertions.push_back(as);
    }
  }
  return c;
}

inline json ExperimentConfig::to_json() const {
  json j;
  j["experiment"] = detail::experiment_name(experiment);
  j["model"] = model == ModelKind::kDiscrete ? "discrete" : "continuum";
  j["dist"] = detail::dist_to_json(dist);
  j["nu"] = params.nu;
  j["beta"] = params.beta;
  j["scales"] = scales;
  j["replicates"] = replicates;
  j["n_envs"] = n_envs;
  j["master_seed"] = master_seed;
  json pts = json::array();
  for (const auto& p : points) pts.push_back({{"t", p.t}, {"r", p.r}});
  j["points"] = pts;
  j["dt"] = dt;
  j["bandwidth"] = bandwidth;
  j["horizon"] = horizon;
  j["t_block"] = t_block;
  j["n_blocks"] = n_blocks;
  j["fit_k_lo"] = fit_k_lo;
  j["fit_k_hi"] = fit_k_hi;
  j["u_levels"] = u_levels;
  j["profile"] = detail::profile_to_json(profile);
  j["noise"] = noise_on;
  return j;
}

// ---------------------------------------------------------------------------
// assertion evaluation
// ---------------------------------------------------------------------------

inline void evaluate_assertions(const ExperimentConfig& cfg, EnsembleResult& res) {
  for (const auto& a : cfg.assertions) {
    AssertionResult ar;
    ar.name = a.name.empty() ? a.stat + " " + a.op : a.name;
    const double v = res.stat(a.stat);
    ar.observed = v;
    if (a.op == "le") {
      const double rhs = a.target_stat.empty() ? a.value : res.stat(a.target_stat);
      ar.bound_hi = rhs;
      ar.bound_lo = -std::numeric_limits<double>::infinity();
      ar.pass = v <= rhs;
    } else if (a.op == "ge") {
      const double rhs = a.target_stat.empty() ? a.value : res.stat(a.target_stat);
      ar.bound_lo = rhs;
      ar.bound_hi = std::numeric_limits<double>::infinity();
      ar.pass = v >= rhs;
    } else if (a.op == "abs_le") {
      ar.bound_lo = -a.value;
      ar.bound_hi = a.value;
      ar.pass = std::fabs(v) <= a.value;
    } else if (a.op == "within") {
      const double target = a.target_stat.empty() ? a.value : res.stat(a.target_stat);
      const double tol = a.mult * (a.tol_stat.empty() ? a.tol : res.stat(a.tol_stat));
      ar.bound_lo = target - tol;
      ar.bound_hi = target + tol;
      ar.pass = v >= ar.bound_lo && v <= ar.bound_hi;
    } else {
      throw std::domain_error("unknown assertion op: " + a.op);
    }
    res.assertions.push_back(ar);
  }
}

namespace detail {

inline void finalize(const ExperimentConfig& cfg, EnsembleResult& res,
                     std::chrono::steady_clock::time_point t0) {
  const auto t1 = std::chrono::steady_clock::now();
  const json cj = cfg.to_json();
  res.metadata["config"] = cj;
  char hex[20];
  std::snprintf(hex, sizeof(hex), "%016llx",
                static_cast<unsigned long long>(config_hash(cj)));
  res.metadata["config_hash"] = hex;
  res.metadata["master_seed"] = cfg.master_seed;
  res.metadata["generator"] = "xoshiro256++ / polar normals";
  res.metadata["wall_ms"] =
      std::chrono::duration_cast<std::chrono::milliseconds>(t1 - t0).count();
  evaluate_assertions(cfg, res);
}

inline double fitted_normal_ks(const std::vector<double>& sample, double* ks_crit = nullptr) {
  const double m = mean(sample);
  const double sd = std::sqrt(variance(sample));
  if (ks_crit) *ks_crit = 1.628 / std::sqrt(static_cast<double>(sample.size()));
  if (!(sd > 0.0)) return 1.0;  // degenerate sample: maximally far from any Gaussian
  const KsResult ks =
      ks_statistic(sample, [m, sd](double x) { return norm_cdf((x - m) / sd); });
  return ks.statistic;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// continuum experiments
// ---------------------------------------------------------------------------

inline EnsembleResult run_two_point_cov(const ExperimentConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  cfg.params.validate();
  EnsembleResult res;
  res.experiment = "two_point_cov";
  const int R = cfg.replicates;
  std::vector<TwoPointSummary> rows(static_cast<std::size_t>(R));
  const int jobs = cfg.jobs > 0 ? cfg.jobs : default_jobs();
  parallel_replicates(R, jobs, [&](int r) {
    rows[static_cast<std::size_t>(r)] =
        two_point_summary(0.0, 0.0, cfg.params, cfg.dt, cfg.horizon, cfg.bandwidth,
                          RngStream::substream(cfg.master_seed, static_cast<std::uint64_t>(r)));
  });
  std::vector<double> x1(rows.size()), x2(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    x1[i] = rows[i].x1_end;
    x2[i] = rows[i].x2_end;
  }
  const double t = cfg.horizon;
  const double cov = covariance(x1, x2);
  res.put("cov_mc", cov);
  res.put("cov_se", std_error_of_cov(x1, x2));
  res.put("g_plus_h",
          cov_G(0.0, t, cfg.params.nu) + cov_H(0.0, t, cfg.params.nu));
  res.put("mean_x1", mean(x1));
  res.put("var_x1", variance(x1));
  // KS of the standardized endpoint against N(0,1)
  std::vector<double> std1(x1.size());
  for (std::size_t i = 0; i < x1.size(); ++i)
    std1[i] = (x1[i] - cfg.params.beta * t) / std::sqrt(t);
  const KsResult ks = ks_statistic(std1, [](double v) { return norm_cdf(v); });
  res.put("ks_x1", ks.statistic);
  res.put("ks_crit_1pct", ks.critical_1pct);
  res.table_columns["replicates"] = {"x1_end", "x2_end", "meet_occupation", "local_time"};
  auto& tab = res.tables["replicates"];
  tab.reserve(rows.size());
  for (const auto& r : rows)
    tab.push_back({r.x1_end, r.x2_end, r.meet_occupation, r.local_time});
  ExperimentConfig c2 = cfg;
  if (c2.assertions.empty()) {
    c2.assertions.push_back({"cov matches G+H", "cov_mc", "within", 0.0, "g_plus_h", "cov_se", 0.0, 3.0});
    c2.assertions.push_back({"endpoint KS at 1%", "ks_x1", "le", 0.0, "ks_crit_1pct", "", 0.0, 1.0});
  }
  detail::finalize(c2, res, t0);
  return res;
}

inline EnsembleResult run_local_time(const ExperimentConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  cfg.params.validate();
  EnsembleResult res;
  res.experiment = "local_time";
  const int R = cfg.replicates;
  std::vector<TwoPointSummary> rows(static_cast<std::size_t>(R));
  const int jobs = cfg.jobs > 0 ? cfg.jobs : default_jobs();
  parallel_replicates(R, jobs, [&](int r) {
    rows[static_cast<std::size_t>(r)] =
        two_point_summary(0.0, 0.0, cfg.params, cfg.dt, cfg.horizon, cfg.bandwidth,
                          RngStream::substream(cfg.master_seed, static_cast<std::uint64_t>(r)));
  });
  std::vector<double> meet(rows.size()), lt(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    meet[i] = rows[i].meet_occupation;
    lt[i] = rows[i].local_time;
  }
  const double nu = cfg.params.nu;
  res.put("meet_mean", mean(meet));
  res.put("meet_se", std_error_of_mean(meet));
  res.put("meet_target", 2.0 * nu * mean_local_time_zero(cfg.horizon, nu));
  ExperimentConfig c2 = cfg;
  bool add_defaults = c2.assertions.empty();
  if (add_defaults)
    c2.assertions.push_back(
        {"meet occupation matches 2 nu E[Lambda]", "meet_mean", "within", 0.0, "meet_target",
         "meet_se", 0.0, 3.0});
  for (std::size_t ui = 0; ui < cfg.u_levels.size(); ++ui) {
    const double u = cfg.u_levels[ui];
    double cnt = 0.0;
    for (double v : lt) cnt += (v > u) ? 1.0 : 0.0;
    const double phat = cnt / static_cast<double>(lt.size());
    const double se = std::sqrt(std::max(phat * (1.0 - phat), 1e-12) /
                                static_cast<double>(lt.size()));
    const std::string tag = "tail_" + std::to_string(ui);
    res.put(tag, phat);
    res.put(tag + "_se", se);
    res.put(tag + "_target", local_time_tail(u, cfg.horizon, nu, 0.0));
    if (add_defaults)
      c2.assertions.push_back({"local-time tail at u=" + format_double(u), tag, "within", 0.0,
                               tag + "_target", tag + "_se", 0.0, 3.0});
  }
  res.table_columns["replicates"] = {"meet_occupation", "local_time"};
  auto& tab = res.tables["replicates"];
  for (const auto& r : rows) tab.push_back({r.meet_occupation, r.local_time});
  detail::finalize(c2, res, t0);
  return res;
}

inline EnsembleResult run_return_decay(const ExperimentConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  EnsembleResult res;
  res.experiment = "return_decay";
  const auto profile = return_probability_profile(cfg.params, cfg.t_block, cfg.n_blocks,
                                                  cfg.replicates, cfg.dt, cfg.bandwidth,
                                                  cfg.master_seed);
  std::vector<double> ks, ps;
  for (int k = cfg.fit_k_lo; k <= std::min<int>(cfg.fit_k_hi, cfg.n_blocks - 1); ++k) {
    if (profile[static_cast<std::size_t>(k)] <= 0.0) continue;
    ks.push_back(static_cast<double>(k));
    ps.push_back(profile[static_cast<std::size_t>(k)]);
  }
  const ScalingFit fit = fit_scaling(ks, ps);
  res.put("slope", fit.slope);
  res.put("slope_stderr", fit.slope_stderr);
  res.put("r_squared", fit.r_squared);
  res.put("p_first_block", profile.front());
  res.table_columns["profile"] = {"k", "p_hit"};
  auto& tab = res.tables["profile"];
  for (std::size_t k = 0; k < profile.size(); ++k)
    tab.push_back({static_cast<double>(k), profile[k]});
  ExperimentConfig c2 = cfg;
  if (c2.assertions.empty()) {
    c2.assertions.push_back({"decay slope upper", "slope", "le", -0.35, "", "", 0.0, 1.0});
    c2.assertions.push_back({"decay slope lower", "slope", "ge", -0.65, "", "", 0.0, 1.0});
    c2.assertions.push_back({"first block hits", "p_first_block", "ge", 0.99, "", "", 0.0, 1.0});
  }
  detail::finalize(c2, res, t0);
  return res;
}

// ---------------------------------------------------------------------------
// discrete experiments
// ---------------------------------------------------------------------------

inline EnsembleResult run_qip(const ExperimentConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  EnsembleResult res;
  res.experiment = "qip";
  require(!cfg.scales.empty(), "qip: scales required");
  if (cfg.model == ModelKind::kContinuum) {
    // averaged-law check: the standardized endpoint of a simulated motion
    // is standard normal
    std::vector<double> xs(static_cast<std::size_t>(cfg.replicates));
    const int jobs = cfg.jobs > 0 ? cfg.jobs : default_jobs();
    parallel_replicates(cfg.replicates, jobs, [&](int r) {
      const auto s =
          two_point_summary(0.0, 0.0, cfg.params, cfg.dt, cfg.horizon, cfg.bandwidth,
                            RngStream::substream(cfg.master_seed, static_cast<std::uint64_t>(r)));
      xs[static_cast<std::size_t>(r)] =
          (s.x1_end - cfg.params.beta * cfg.horizon) / std::sqrt(cfg.horizon);
    });
    const KsResult ks = ks_statistic(xs, [](double v) { return norm_cdf(v); });
    res.put("ks_max", ks.statistic);
    res.put("ks_crit_1pct", ks.critical_1pct);
    ExperimentConfig c2 = cfg;
    if (c2.assertions.empty())
      c2.assertions.push_back({"averaged endpoint KS", "ks_max", "le", 0.0, "ks_crit_1pct", "", 0.0, 1.0});
    detail::finalize(c2, res, t0);
    return res;
  }

  const long N = *std::max_element(cfg.scales.begin(), cfg.scales.end());
  const double beta = cfg.dist.drift();
  const int E = cfg.n_envs;
  std::vector<std::vector<double>> ks_per_env(static_cast<std::size_t>(E));
  std::vector<std::vector<double>> z_per_env(static_cast<std::size_t>(E));
  const int jobs = cfg.jobs > 0 ? cfg.jobs : default_jobs();
  parallel_replicates(E, jobs, [&](int e) {
    const std::uint64_t env_seed = mix_key(cfg.master_seed, static_cast<std::uint64_t>(e));
    LatticeWindow win{-N - 1, N + 1, 0, N};
    Environment env(win, cfg.dist, env_seed);
    std::vector<double> cur(static_cast<std::size_t>(N) + 1, 0.0), nxt;
    cur[0] = 1.0;
    std::vector<double> drift_max(cfg.scales.size(), 0.0);
    std::vector<double> ks(cfg.scales.size(), 0.0);
    for (long k = 0; k < N; ++k) {
      nxt.assign(static_cast<std::size_t>(N) + 1, 0.0);
      for (long i = 0; i <= k; ++i) {
        const double mass = cur[static_cast<std::size_t>(i)];
        if (mass == 0.0) continue;
        const long x = -k + 2 * i;
        const double w = env.omega_unchecked(x, k);
        nxt[static_cast<std::size_t>(i) + 1] += mass * w;
        nxt[static_cast<std::size_t>(i)] += mass * (1.0 - w);
      }
      cur.swap(nxt);
      const long kk = k + 1;
      double m = 0.0;
      for (long i = 0; i <= kk; ++i)
        m += cur[static_cast<std::size_t>(i)] * static_cast<double>(-kk + 2 * i);
      const double dev = std::fabs(m - beta * static_cast<double>(kk));
      for (std::size_t si = 0; si < cfg.scales.size(); ++si)
        if (kk <= cfg.scales[si])
          drift_max[si] = std::max(drift_max[si], dev);
      // quenched law of X_n at each configured scale: KS against the
      // Gaussian with the exact quenched mean and variance from the DP
      for (std::size_t si = 0; si < cfg.scales.size(); ++si) {
        if (kk != cfg.scales[si]) continue;
        double var = 0.0;
        for (long i = 0; i <= kk; ++i) {
          const double y = static_cast<double>(-kk + 2 * i) - m;
          var += cur[static_cast<std::size_t>(i)] * y * y;
        }
        const double sd = std::sqrt(var);
        double cdf = 0.0, d = 0.0;
        for (long i = 0; i <= kk; ++i) {
          const double y = static_cast<double>(-kk + 2 * i);
          const double F = norm_cdf((y - m) / sd);
          d = std::max(d, std::fabs(cdf - F));  // just below the atom
          cdf += cur[static_cast<std::size_t>(i)];
          d = std::max(d, std::fabs(cdf - F));  // just above the atom
        }
        ks[si] = d;
      }
    }
    ks_per_env[static_cast<std::size_t>(e)] = std::move(ks);
    auto& z = z_per_env[static_cast<std::size_t>(e)];
    z.resize(cfg.scales.size());
    for (std::size_t si = 0; si < cfg.scales.size(); ++si)
      z[si] = drift_max[si] / std::sqrt(static_cast<double>(cfg.scales[si]));
  });
  res.table_columns["drift"] = {"env"};
  for (std::size_t si = 0; si < cfg.scales.size(); ++si) {
    res.table_columns["drift"].push_back("z_" + std::to_string(cfg.scales[si]));
    res.table_columns["drift"].push_back("ks_" + std::to_string(cfg.scales[si]));
  }
  auto& tab = res.tables["drift"];
  for (int e = 0; e < E; ++e) {
    std::vector<double> row{static_cast<double>(e)};
    for (std::size_t si = 0; si < cfg.scales.size(); ++si) {
      row.push_back(z_per_env[static_cast<std::size_t>(e)][si]);
      row.push_back(ks_per_env[static_cast<std::size_t>(e)][si]);
    }
    tab.push_back(row);
  }
  for (std::size_t si = 0; si < cfg.scales.size(); ++si) {
    double worst = 0.0;
    for (int e = 0; e < E; ++e)
      worst = std::max(worst, ks_per_env[static_cast<std::size_t>(e)][si]);
    res.put("ks_max_" + std::to_string(cfg.scales[si]), worst);
  }
  double prev_mean = 0.0;
  double worst_increase = -std::numeric_limits<double>::infinity();
  for (std::size_t si = 0; si < cfg.scales.size(); ++si) {
    std::vector<double> zs(static_cast<std::size_t>(E));
    for (int e = 0; e < E; ++e) zs[static_cast<std::size_t>(e)] = z_per_env[static_cast<std::size_t>(e)][si];
    const double zm = mean(zs);
    res.put("z_mean_" + std::to_string(cfg.scales[si]), zm);
    if (si > 0) worst_increase = std::max(worst_increase, zm - prev_mean);
    prev_mean = zm;
  }
  res.put("z_mean_worst_increase", worst_increase);
  ExperimentConfig c2 = cfg;
  if (c2.assertions.empty()) {
    c2.assertions.push_back({"quenched-law KS at the largest scale",
                             "ks_max_" + std::to_string(N), "le", 0.05, "", "", 0.0, 1.0});
    c2.assertions.push_back({"drift statistic decreasing in n", "z_mean_worst_increase", "le",
                             1e-12, "", "", 0.0, 1.0});
  }
  detail::finalize(c2, res, t0);
  return res;
}

inline EnsembleResult run_quenched_mean(const ExperimentConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  EnsembleResult res;
  res.experiment = "quenched_mean";
  ExperimentConfig c2 = cfg;
  if (cfg.model == ModelKind::kContinuum) {
    // validate the limit-field sampler against the Gamma kernel
    require(!cfg.points.empty(), "quenched_mean (continuum): points required");
    std::vector<SpaceTimePoint> pts;
    for (const auto& p : cfg.points) pts.push_back({p.t, p.r});
    const auto draws = sample_gaussian_field_ensemble(pts, FieldKernel::kGamma, cfg.params.nu,
                                                      0.0, cfg.master_seed, cfg.replicates);
    const auto kernel = field_covariance(pts, FieldKernel::kGamma, cfg.params.nu, 0.0);
    double worst = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i)
      for (std::size_t j = i; j < pts.size(); ++j) {
        std::vector<double> a(draws.size()), b(draws.size());
        for (std::size_t r = 0; r < draws.size(); ++r) {
          a[r] = draws[r][i];
          b[r] = draws[r][j];
        }
        const double c = covariance(a, b);
        const double se = std_error_of_cov(a, b);
        worst = std::max(worst, std::fabs(c - kernel[i * pts.size() + j]) / se);
      }
    res.put("max_cov_dev_in_se", worst);
    if (c2.assertions.empty())
      c2.assertions.push_back({"sampler covariance matches kernel", "max_cov_dev_in_se", "le",
                               3.0, "", "", 0.0, 1.0});
    detail::finalize(c2, res, t0);
    return res;
  }

  require(!cfg.scales.empty(), "quenched_mean: scales required");
  require(!cfg.points.empty(), "quenched_mean: points required");
  const bool add_defaults = c2.assertions.empty();
  std::vector<double> scale_vals, unrescaled_vars;
  for (long n : cfg.scales) {
    const auto sample =
        quenched_mean_fluctuations(cfg.dist, n, cfg.points, cfg.replicates,
                                   mix_key(cfg.master_seed, static_cast<std::uint64_t>(n)),
                                   cfg.jobs);
    std::vector<double> first(sample.values.size());
    for (std::size_t r = 0; r < sample.values.size(); ++r) first[r] = sample.values[r][0];
    const double var0 = variance(first);
    scale_vals.push_back(static_cast<double>(n));
    unrescaled_vars.push_back(std::sqrt(static_cast<double>(n)) * var0);
    if (n != cfg.scales.back()) continue;

    // full statistics at the largest scale
    const double sqn = std::sqrt(static_cast<double>(n));
    for (std::size_t pi = 0; pi < cfg.points.size(); ++pi) {
      std::vector<double> v(sample.values.size());
      for (std::size_t r = 0; r < sample.values.size(); ++r) v[r] = sample.values[r][pi];
      res.put("mean_pt" + std::to_string(pi), mean(v));
      res.put("mean_se_pt" + std::to_string(pi), std_error_of_mean(v));
      if (add_defaults)
        c2.assertions.push_back({"a_n mean zero at point " + std::to_string(pi),
                                 "mean_pt" + std::to_string(pi), "within", 0.0, "",
                                 "mean_se_pt" + std::to_string(pi), 0.0, 3.0});
    }
    double crit = 0.0;
    const double ks = detail::fitted_normal_ks(first, &crit);
    res.put("ks_an", ks);
    res.put("ks_crit_1pct", crit);
    if (add_defaults)
      c2.assertions.push_back({"a_n marginal normality (1%)", "ks_an", "le", 0.0,
                               "ks_crit_1pct", "", 0.0, 1.0});
    // covariance against the exact pair-chain oracle
    double trend_violation = -std::numeric_limits<double>::infinity();
    double prev_cov = 0.0, prev_se = 0.0;
    for (std::size_t pj = 0; pj < cfg.points.size(); ++pj) {
      std::vector<double> vj(sample.values.size());
      for (std::size_t r = 0; r < sample.values.size(); ++r) vj[r] = sample.values[r][pj];
      const double c = covariance(first, vj);
      const double se = std_error_of_cov(first, vj);
      const auto oracle = z_cov_oracle_linear(cfg.dist, n, 1.0, cfg.points[0], cfg.points[pj],
                                              /*noise_on=*/false);
      res.put("cov_0" + std::to_string(pj), c);
      res.put("cov_0" + std::to_string(pj) + "_se", se);
      res.put("oracle_0" + std::to_string(pj), oracle.dynamics);
      if (add_defaults)
        c2.assertions.push_back({"cov(0," + std::to_string(pj) + ") matches DP oracle",
                                 "cov_0" + std::to_string(pj), "within", 0.0,
                                 "oracle_0" + std::to_string(pj),
                                 "cov_0" + std::to_string(pj) + "_se", 0.0, 3.0});
      if (pj > 0) trend_violation = std::max(trend_violation, c - prev_cov - 2.0 * (se + prev_se));
      prev_cov = c;
      prev_se = se;
    }
    if (cfg.points.size() >= 2) {
      res.put("cov_trend_violation", trend_violation);
      if (add_defaults)
        c2.assertions.push_back(
            {"covariance decays with spatial distance", "cov_trend_violation", "le", 0.0, "", "",
             0.0, 1.0});
    }
  }
  if (cfg.scales.size() >= 3) {
    const ScalingFit fit = fit_scaling(scale_vals, unrescaled_vars);
    res.put("var_scaling_slope", fit.slope);
    res.put("var_scaling_stderr", fit.slope_stderr);
    if (add_defaults) {
      c2.assertions.push_back({"variance scaling slope upper", "var_scaling_slope", "le", 0.6, "",
                               "", 0.0, 1.0});
      c2.assertions.push_back({"variance scaling slope lower", "var_scaling_slope", "ge", 0.4, "",
                               "", 0.0, 1.0});
    }
  }
  detail::finalize(c2, res, t0);
  return res;
}

inline EnsembleResult run_current(const ExperimentConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  EnsembleResult res;
  res.experiment = "current";
  require(cfg.model == ModelKind::kDiscrete, "current: discrete model only");
  require(!cfg.scales.empty() && !cfg.points.empty(), "current: scales and points required");
  const long n = cfg.scales.back();
  ExperimentConfig c2 = cfg;
  const bool add_defaults = c2.assertions.empty();

  auto run_one = [&](const InitialProfile& prof, bool noise, std::uint64_t salt) {
    return current_fluctuations(cfg.dist, prof, n, cfg.points, cfg.replicates,
                                mix_key(cfg.master_seed, salt), noise, cfg.jobs);
  };
  InitialProfile zero_prof;
  zero_prof.x0 = cfg.profile.x0;

  const auto full = run_one(cfg.profile, cfg.noise_on, 1);
  std::vector<double> zf(full.values.size());
  for (std::size_t r = 0; r < zf.size(); ++r) zf[r] = full.values[r][0];
  res.put("var_full", variance(zf));
  res.put("var_full_se", std_error_of_variance(zf));
  res.put("mean_zn", mean(zf));
  res.put("mean_zn_se", std_error_of_mean(zf));
  double crit = 0.0;
  const double ks = detail::fitted_normal_ks(zf, &crit);
  res.put("ks_zn", ks);
  res.put("ks_crit_1pct", crit);

  if (cfg.noise_on && cfg.profile.kind != ProfileKind::kZero) {
    const auto fonly = run_one(cfg.profile, false, 2);
    const auto wonly = run_one(zero_prof, true, 3);
    std::vector<double> zf2(fonly.values.size()), zw(wonly.values.size());
    for (std::size_t r = 0; r < zf2.size(); ++r) zf2[r] = fonly.values[r][0];
    for (std::size_t r = 0; r < zw.size(); ++r) zw[r] = wonly.values[r][0];
    res.put("var_f", variance(zf2));
    res.put("var_f_se", std_error_of_variance(zf2));
    res.put("var_w", variance(zw));
    res.put("var_w_se", std_error_of_variance(zw));
    const double gap = res.stat("var_full") - res.stat("var_f") - res.stat("var_w");
    const double gap_se = std::sqrt(res.stat("var_full_se") * res.stat("var_full_se") +
                                    res.stat("var_f_se") * res.stat("var_f_se") +
                                    res.stat("var_w_se") * res.stat("var_w_se"));
    res.put("additivity_gap", gap);
    res.put("additivity_gap_se", gap_se);
    if (add_defaults)
      c2.assertions.push_back({"variance additivity", "additivity_gap", "within", 0.0, "",
                               "additivity_gap_se", 0.0, 3.0});
  }
  if (cfg.profile.kind == ProfileKind::kLinear && cfg.points.size() >= 2) {
    // exact same-model DP oracle for the two-point covariance
    std::vector<double> z1(full.values.size());
    for (std::size_t r = 0; r < z1.size(); ++r) z1[r] = full.values[r][1];
    const double c = covariance(zf, z1);
    const double se = std_error_of_cov(zf, z1);
    const auto oracle = z_cov_oracle_linear(cfg.dist, n, cfg.profile.slope, cfg.points[0],
                                            cfg.points[1], cfg.noise_on);
    res.put("cov_01", c);
    res.put("cov_01_se", se);
    res.put("oracle_01", oracle.total);
    if (add_defaults)
      c2.assertions.push_back({"z_n covariance matches DP oracle", "cov_01", "within", 0.0,
                               "oracle_01", "cov_01_se", 0.0, 3.0});
  }
  if (add_defaults) {
    c2.assertions.push_back({"z_n marginal normality (1%)", "ks_zn", "le", 0.0, "ks_crit_1pct",
                             "", 0.0, 1.0});
    c2.assertions.push_back(
        {"z_n mean zero", "mean_zn", "within", 0.0, "", "mean_zn_se", 0.0, 3.0});
  }
  res.table_columns["values"] = {"replicate", "point", "z"};
  auto& tab = res.tables["values"];
  for (std::size_t r = 0; r < full.values.size(); ++r)
    for (std::size_t p = 0; p < full.values[r].size(); ++p)
      tab.push_back({static_cast<double>(r), static_cast<double>(p), full.values[r][p]});
  detail::finalize(c2, res, t0);
  return res;
}

inline EnsembleResult run_experiment(const ExperimentConfig& cfg) {
  switch (cfg.experiment) {
    case ExperimentKind::kQip: return run_qip(cfg);
    case ExperimentKind::kQuenchedMean: return run_quenched_mean(cfg);
    case ExperimentKind::kCurrent: return run_current(cfg);
    case ExperimentKind::kTwoPointCov: return run_two_point_cov(cfg);
    case ExperimentKind::kLocalTime: return run_local_time(cfg);
    case ExperimentKind::kReturnDecay: return run_return_decay(cfg);
  }
  throw std::domain_error("unknown experiment");
}

}  // namespace hwflow
