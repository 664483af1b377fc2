// hwflow: evaluate the closed-form kernels, simulate the two-point motion,
// check the discrete-flow identities, and run harness experiments.
//
// Exit codes: 0 all checks pass, 1 assertion failure, 2 configuration error,
// 3 numeric error.

#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hwflow/analytics.hpp"
#include "hwflow/discrete.hpp"
#include "hwflow/harness.hpp"
#include "hwflow/io.hpp"
#include "hwflow/parallel.hpp"
#include "hwflow/sticky.hpp"
#include "hwflow/web.hpp"

namespace {

using hwflow::json;

constexpr int kExitOk = 0;
constexpr int kExitAssertion = 1;
constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(std::stod(tok));
  if (out.empty()) throw std::domain_error("empty value list");
  return out;
}

// ---------------------------------------------------------------------------
// analytics-eval
// ---------------------------------------------------------------------------

struct EvalRow {
  std::vector<double> args;
  double value = 0.0;
  double est_error = 0.0;
};

struct OpSpec {
  std::vector<std::string> arg_names;
  std::function<EvalRow(const std::vector<double>&)> eval;
};

std::map<std::string, OpSpec> analytics_ops() {
  using namespace hwflow;
  std::map<std::string, OpSpec> ops;
  ops["std_normal_cdf"] = {{"x"}, [](const std::vector<double>& a) {
                             return EvalRow{a, std_normal_cdf(a[0]), 1e-15};
                           }};
  ops["first_passage_tail"] = {{"x", "t"}, [](const std::vector<double>& a) {
                                 return EvalRow{a, first_passage_tail(a[0], a[1]), 1e-14};
                               }};
  ops["local_time_tail"] = {{"u", "t", "nu", "x0"}, [](const std::vector<double>& a) {
                              return EvalRow{a, local_time_tail(a[0], a[1], a[2], a[3]), 1e-14};
                            }};
  ops["mean_local_time_zero"] = {{"t", "nu"}, [](const std::vector<double>& a) {
                                   return EvalRow{a, mean_local_time_zero(a[0], a[1]), 1e-13};
                                 }};
  ops["cov_g"] = {{"x", "t", "nu"}, [](const std::vector<double>& a) {
                    QuadratureSpec spec;
                    return EvalRow{a, cov_G(a[0], a[1], a[2], spec), spec.abs_tol};
                  }};
  ops["cov_h"] = {{"x", "t", "nu"}, [](const std::vector<double>& a) {
                    QuadratureSpec spec;
                    return EvalRow{a, cov_H(a[0], a[1], a[2], spec), spec.abs_tol};
                  }};
  ops["gamma"] = {{"t", "r", "s", "q", "nu"}, [](const std::vector<double>& a) {
                    return EvalRow{a, gamma_cov({a[0], a[1]}, {a[2], a[3]}, a[4]), 1e-13};
                  }};
  ops["gamma0"] = {{"t", "r", "s", "q"}, [](const std::vector<double>& a) {
                     QuadratureSpec spec;
                     return EvalRow{a, gamma0_cov({a[0], a[1]}, {a[2], a[3]}, spec),
                                    3.0 * spec.abs_tol};
                   }};
  ops["z_limit"] = {{"t", "r", "s", "q", "nu", "fprime"}, [](const std::vector<double>& a) {
                      QuadratureSpec spec;
                      return EvalRow{a, z_limit_cov({a[0], a[1]}, {a[2], a[3]}, a[4], a[5], spec),
                                     4.0 * spec.abs_tol};
                    }};
  ops["appendix_b_gap"] = {{"x", "t"}, [](const std::vector<double>& a) {
                             QuadratureSpec spec;
                             const auto chk = appendix_b_check(a[0], a[1], spec);
                             return EvalRow{a, chk.gap, 2.0 * spec.abs_tol};
                           }};
  return ops;
}

int cmd_analytics_eval(const std::string& op, const std::map<std::string, std::string>& arg_lists,
                       const std::string& out_path) {
  const auto ops = analytics_ops();
  const auto it = ops.find(op);
  if (it == ops.end()) {
    std::cerr << "unknown op: " << op << "\n";
    return kExitConfig;
  }
  const auto& spec = it->second;
  std::vector<std::vector<double>> grids;
  for (const auto& name : spec.arg_names) {
    const auto ai = arg_lists.find(name);
    if (ai == arg_lists.end() || ai->second.empty()) {
      std::cerr << "missing required argument --" << name << " for op " << op << "\n";
      return kExitConfig;
    }
    grids.push_back(parse_list(ai->second));
  }
  std::ostringstream csv;
  csv << "op";
  for (const auto& n : spec.arg_names) csv << "," << n;
  csv << ",value,est_error\n";
  std::vector<std::size_t> idx(grids.size(), 0);
  bool done = false;
  while (!done) {
    std::vector<double> args(grids.size());
    for (std::size_t i = 0; i < grids.size(); ++i) args[i] = grids[i][idx[i]];
    const EvalRow row = spec.eval(args);
    csv << op;
    for (double a : row.args) csv << "," << hwflow::format_double(a);
    csv << "," << hwflow::format_double(row.value) << "," << hwflow::format_double(row.est_error)
        << "\n";
    // advance the cartesian product
    std::size_t pos = grids.size();
    while (pos > 0) {
      --pos;
      if (++idx[pos] < grids[pos].size()) break;
      idx[pos] = 0;
      if (pos == 0) done = true;
    }
    if (grids.empty()) done = true;
  }
  if (out_path.empty()) {
    std::cout << csv.str();
  } else {
    std::ofstream f(out_path);
    f << csv.str();
    std::cout << "wrote " << out_path << "\n";
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// simulate two-point
// ---------------------------------------------------------------------------

int cmd_simulate_two_point(double x1, double x2, double nu, double beta, double dt, double horizon,
                           double bandwidth, int replicates, std::uint64_t seed, int jobs,
                           const std::string& out_path) {
  hwflow::StickyParams params{nu, beta};
  params.validate();
  std::vector<hwflow::TwoPointSummary> rows(static_cast<std::size_t>(replicates));
  hwflow::parallel_replicates(replicates, jobs > 0 ? jobs : hwflow::default_jobs(), [&](int r) {
    rows[static_cast<std::size_t>(r)] = hwflow::two_point_summary(
        x1, x2, params, dt, horizon, bandwidth,
        hwflow::RngStream::substream(seed, static_cast<std::uint64_t>(r)));
  });
  json meta{{"x1", x1},       {"x2", x2},     {"nu", nu},
            {"beta", beta},   {"dt", dt},     {"horizon", horizon},
            {"bandwidth", bandwidth},         {"replicates", replicates},
            {"master_seed", seed},            {"generator", "xoshiro256++ / polar normals"}};
  std::ostream* os = &std::cout;
  std::ofstream f;
  if (!out_path.empty()) {
    f.open(out_path);
    os = &f;
  }
  *os << "# " << meta.dump() << "\n";
  *os << "replicate,x1_end,x2_end,meet_occupation,local_time\n";
  for (std::size_t r = 0; r < rows.size(); ++r)
    *os << r << "," << hwflow::format_double(rows[r].x1_end) << ","
        << hwflow::format_double(rows[r].x2_end) << ","
        << hwflow::format_double(rows[r].meet_occupation) << ","
        << hwflow::format_double(rows[r].local_time) << "\n";
  if (!out_path.empty()) std::cout << "wrote " << out_path << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// discrete-check
// ---------------------------------------------------------------------------

int cmd_discrete_check(const std::string& what, int n_envs, long size, std::uint64_t seed) {
  using namespace hwflow;
  EnvDistribution dist;  // beta(2,2)
  bool pass = true;
  double worst = 0.0;
  if (what == "chapman-kolmogorov") {
    const long horizon = std::min<long>(size, 32);
    for (int e = 0; e < n_envs; ++e) {
      LatticeWindow win{-horizon - 2, horizon + 2, 0, horizon};
      Environment env(win, dist, mix_key(seed, static_cast<std::uint64_t>(e)));
      const long mid = horizon / 2;
      const KernelSlice direct = propagate_kernel(env, 0, 0, horizon);
      const KernelSlice firstleg = propagate_kernel(env, 0, 0, mid);
      const KernelSlice composed = compose(env, firstleg, horizon);
      for (std::size_t i = 0; i < direct.probs.size(); ++i)
        worst = std::max(worst, std::fabs(direct.probs[i] - composed.probs[i]));
    }
    pass = worst <= 1e-12;
    std::printf("chapman-kolmogorov: %s (max entrywise gap %.3e <= 1e-12, %d environments)\n",
                pass ? "PASS" : "FAIL", worst, n_envs);
  } else if (what == "current-identity") {
    for (int e = 0; e < n_envs; ++e) {
      const std::uint64_t es = mix_key(seed, static_cast<std::uint64_t>(e));
      RngStream rng(mix_key(es, 99));
      const long t = 1 + static_cast<long>(rng.next_u64() % 20);
      LatticeWindow win{-t - 30, t + 30, -t, 0};
      Environment env(win, dist, es);
      std::map<long, double> rho;
      for (int a = 0; a < 10; ++a) {
        const long z = 2 * (static_cast<long>(rng.next_u64() % 21) - 10);
        rho[z] += rng.uniform() * 2.0;
      }
      const long x = 2 * (static_cast<long>(rng.next_u64() % 11) - 5);
      long y = 2 * (static_cast<long>(rng.next_u64() % 11) - 5);
      if (!is_even_site(y, -t)) y += 1;
      const auto chk = current_identity_check(env, rho, x, y, t);
      worst = std::max(worst, chk.gap);
    }
    pass = worst <= 1e-10;
    std::printf("current-identity: %s (max gap %.3e <= 1e-10, %d instances)\n",
                pass ? "PASS" : "FAIL", worst, n_envs);
  } else if (what == "noncrossing") {
    for (int e = 0; e < n_envs; ++e) {
      const std::uint64_t es = mix_key(seed, static_cast<std::uint64_t>(e));
      LatticeWindow win{0, size - 1, 0, size - 1};
      Environment env(win, dist, es);
      const ArrowConfig web = sample_web(env, mix_key(es, 7));
      const DualArrowConfig dual = build_dual_web(web);
      if (check_noncrossing(web, dual)) {
        pass = false;
        break;
      }
    }
    std::printf("noncrossing: %s (%d sampled web/dual pairs of size %ldx%ld)\n",
                pass ? "PASS" : "FAIL", n_envs, size, size);
  } else if (what == "duality") {
    // the dual kernel defined by K_dual_{t,0}(y, (-inf, x]) = K_{0,t}(x, [y, inf))
    // must be a bona fide distribution in x: tails in [0,1], nondecreasing in
    // x (monotone coupling), sweeping from 0 to 1 across the cone
    const long t = 16;
    for (int e = 0; e < n_envs; ++e) {
      LatticeWindow win{-3 * t - 4, 3 * t + 4, 0, t};
      Environment env(win, dist, mix_key(seed, static_cast<std::uint64_t>(e)));
      std::vector<KernelSlice> slices;
      for (long x = -2 * t - 2; x <= 2 * t + 2; x += 2)
        slices.push_back(propagate_kernel(env, x, 0, t));
      for (long y = -t; y <= t; y += 2) {
        if (!is_even_site(y, t)) continue;
        double prev = 0.0;
        for (const auto& s : slices) {
          const double tail = s.tail_geq(y);
          worst = std::max(worst, prev - tail);            // monotone in x
          worst = std::max(worst, std::max(-tail, tail - 1.0));  // in [0,1]
          prev = tail;
        }
        worst = std::max(worst, std::fabs(prev - 1.0));    // sweeps to 1
      }
    }
    pass = worst <= 1e-12;
    std::printf("duality: %s (max violation %.3e <= 1e-12, %d environments)\n",
                pass ? "PASS" : "FAIL", worst, n_envs);
  } else {
    std::cerr << "unknown check: " << what << "\n";
    return kExitConfig;
  }
  return pass ? kExitOk : kExitAssertion;
}

// ---------------------------------------------------------------------------
// experiment / golden
// ---------------------------------------------------------------------------

int cmd_experiment(const std::string& config_path, std::uint64_t seed_override, bool has_seed,
                   int jobs, const std::string& out_dir) {
  json cj = hwflow::load_json_file(config_path);
  hwflow::ExperimentConfig cfg = hwflow::ExperimentConfig::from_json(cj);
  if (has_seed) cfg.master_seed = seed_override;
  if (jobs > 0) cfg.jobs = jobs;
  const hwflow::EnsembleResult res = hwflow::run_experiment(cfg);
  for (const auto& a : res.assertions)
    std::printf("%-4s %-45s observed=%.6g bounds=[%.6g, %.6g]\n", a.pass ? "PASS" : "FAIL",
                a.name.c_str(), a.observed, a.bound_lo, a.bound_hi);
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    const std::string base = out_dir + "/" + res.experiment;
    hwflow::write_json_file(base + "_result.json", res.to_json());
    for (const auto& [name, rows] : res.tables) {
      hwflow::CsvWriter csv(base + "_" + name + ".csv");
      csv.header(res.table_columns.at(name));
      for (const auto& row : rows) csv.row_values(row);
    }
    std::cout << "wrote " << base << "_result.json\n";
  }
  return res.all_pass() ? kExitOk : kExitAssertion;
}

int cmd_golden(const std::string& config_path, const std::string& out_dir, bool overwrite) {
  json cfg = hwflow::load_json_file(config_path);
  if (!cfg.contains("grids") || cfg["grids"].empty()) {
    std::cout << "golden: empty grid config, nothing to do\n";
    return kExitOk;
  }
  const auto ops = analytics_ops();
  std::ostringstream csv;
  csv << "op,args,value\n";
  for (const auto& grid : cfg["grids"]) {
    const std::string op = grid.at("op").get<std::string>();
    const auto it = ops.find(op);
    if (it == ops.end()) {
      std::cerr << "golden: unknown op " << op << "\n";
      return kExitConfig;
    }
    std::vector<std::vector<double>> lists;
    for (const auto& name : it->second.arg_names)
      lists.push_back(grid.at(name).get<std::vector<double>>());
    std::vector<std::size_t> idx(lists.size(), 0);
    bool done = false;
    while (!done) {
      std::vector<double> args(lists.size());
      for (std::size_t i = 0; i < lists.size(); ++i) args[i] = lists[i][idx[i]];
      const EvalRow row = it->second.eval(args);
      csv << op << ",";
      for (std::size_t i = 0; i < args.size(); ++i)
        csv << (i ? ";" : "") << hwflow::format_double(args[i]);
      csv << "," << hwflow::format_double(row.value) << "\n";
      std::size_t pos = lists.size();
      while (pos > 0) {
        --pos;
        if (++idx[pos] < lists[pos].size()) break;
        idx[pos] = 0;
        if (pos == 0) done = true;
      }
    }
  }
  const std::string fresh = csv.str();
  const std::string target = out_dir + "/analytics_golden.csv";
  const double tol = cfg.value("tolerance", 1e-9);
  if (std::filesystem::exists(target)) {
    std::ifstream in(target);
    std::stringstream old;
    old << in.rdbuf();
    if (old.str() == fresh) {
      std::cout << "golden: up to date (" << target << ")\n";
      return kExitOk;
    }
    // compare row by row within tolerance
    auto parse_values = [](const std::string& text) {
      std::vector<double> vals;
      std::stringstream ss(text);
      std::string line;
      std::getline(ss, line);  // header
      while (std::getline(ss, line)) {
        const auto pos = line.rfind(',');
        if (pos != std::string::npos) vals.push_back(std::stod(line.substr(pos + 1)));
      }
      return vals;
    };
    const auto vo = parse_values(old.str());
    const auto vn = parse_values(fresh);
    double drift = std::numeric_limits<double>::infinity();
    if (vo.size() == vn.size()) {
      drift = 0.0;
      for (std::size_t i = 0; i < vo.size(); ++i)
        drift = std::max(drift, std::fabs(vo[i] - vn[i]) / (1.0 + std::fabs(vo[i])));
    }
    if (!overwrite) {
      std::printf("golden: drift %.3e vs committed values (tolerance %.1e); refusing to "
                  "overwrite without --overwrite-goldens\n",
                  drift, tol);
      return kExitAssertion;
    }
    std::printf("golden: drift %.3e, rewriting %s\n", drift, target.c_str());
  }
  std::filesystem::create_directories(out_dir);
  std::ofstream out(target);
  out << fresh;
  std::cout << "wrote " << target << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Howitt-Warren flow simulation and verification toolkit"};
  app.require_subcommand(1);

  // analytics-eval
  auto* eval = app.add_subcommand("analytics-eval", "evaluate a closed-form law on a grid");
  std::string op;
  eval->add_option("--op", op, "operation name")->required();
  std::map<std::string, std::string> arg_lists;
  for (const char* name : {"x", "t", "nu", "u", "x0", "r", "s", "q", "fprime"})
    eval->add_option(std::string("--") + name, arg_lists[name],
                     std::string("comma-separated values for ") + name);
  std::string eval_out;
  eval->add_option("--out", eval_out, "output CSV path (default stdout)");

  // simulate two-point
  auto* simulate = app.add_subcommand("simulate", "pathwise simulation");
  auto* twopoint = simulate->add_subcommand("two-point", "coupled two-point motion ensemble");
  double x1 = 0.0, x2 = 0.0, nu = 1.0, beta = 0.0, dt = 1e-4, horizon = 1.0, bandwidth = 1e-3;
  int replicates = 1000, jobs = 0;
  std::uint64_t seed = 1;
  bool has_seed = false;
  std::string sim_out;
  twopoint->add_option("--x1", x1);
  twopoint->add_option("--x2", x2);
  twopoint->add_option("--nu", nu);
  twopoint->add_option("--beta", beta);
  twopoint->add_option("--dt", dt);
  twopoint->add_option("--horizon", horizon);
  twopoint->add_option("--bandwidth", bandwidth);
  twopoint->add_option("--replicates", replicates);
  twopoint->add_option("--out", sim_out);

  // discrete-check
  auto* dcheck = app.add_subcommand("discrete-check", "exact discrete-flow identities");
  std::string what = "chapman-kolmogorov";
  int n_envs = 100;
  long size = 100;
  dcheck->add_option("--what", what, "chapman-kolmogorov | current-identity | noncrossing");
  dcheck->add_option("--n-envs", n_envs);
  dcheck->add_option("--size", size);

  // experiment
  auto* experiment = app.add_subcommand("experiment", "run a configured experiment");
  std::string config_path, out_dir;
  experiment->add_option("--config", config_path, "experiment config JSON")->required();
  experiment->add_option("--out", out_dir, "output directory");

  // golden
  auto* golden = app.add_subcommand("golden", "regenerate / verify golden formula tables");
  std::string golden_config = "goldens/golden_config.json";
  std::string golden_out = "goldens";
  bool overwrite = false;
  golden->add_option("--config", golden_config);
  golden->add_option("--out", golden_out);
  golden->add_flag("--overwrite-goldens", overwrite);

  // global-ish options
  for (auto* sub : {eval, twopoint, dcheck, experiment, golden}) {
    sub->add_option("--seed", seed)->each([&](const std::string&) { has_seed = true; });
    sub->add_option("--jobs", jobs);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (eval->parsed()) return cmd_analytics_eval(op, arg_lists, eval_out);
    if (twopoint->parsed())
      return cmd_simulate_two_point(x1, x2, nu, beta, dt, horizon, bandwidth, replicates,
                                    has_seed ? seed : 1, jobs, sim_out);
    if (simulate->parsed()) {
      std::cerr << "simulate: missing subcommand (two-point)\n";
      return kExitConfig;
    }
    if (dcheck->parsed()) return cmd_discrete_check(what, n_envs, size, has_seed ? seed : 1);
    if (experiment->parsed())
      return cmd_experiment(config_path, seed, has_seed, jobs, out_dir);
    if (golden->parsed()) return cmd_golden(golden_config, golden_out, overwrite);
  } catch (const hwflow::numeric_error& e) {
    std::cerr << "numeric error: " << e.what() << " (estimate " << e.estimate() << ", bound "
              << e.error_bound() << ")\n";
    return kExitNumeric;
  } catch (const json::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::domain_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  return kExitConfig;
}
