// The discrete Howitt-Warren flow: quenched kernels by dynamic programming,
// duality, the smoothing process, and the rescaled fluctuation observables.
#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <vector>

#include "hwflow/analytics.hpp"
#include "hwflow/environment.hpp"
#include "hwflow/parallel.hpp"
#include "hwflow/rng.hpp"

namespace hwflow {

// Quenched transition kernel K_{s,t}(x, .), stored densely over the reachable
// cone {y : |y - x| <= t - s, y = x + (t-s) mod 2}.
struct KernelSlice {
  long origin_x = 0;
  long origin_s = 0;
  long horizon_t = 0;
  long y_min = 0;  // leftmost support point; support steps by 2
  std::vector<double> probs;

  double prob(long y) const {
    const long idx = (y - y_min) / 2;
    if (y < y_min || ((y - y_min) & 1L) != 0 || idx >= static_cast<long>(probs.size()))
      return 0.0;
    return probs[static_cast<std::size_t>(idx)];
  }

  // K(x, [y, inf)) with exact summation from the right.
  double tail_geq(long y) const {
    double acc = 0.0;
    for (long i = static_cast<long>(probs.size()) - 1; i >= 0; --i) {
      const long yy = y_min + 2 * i;
      if (yy < y) break;
      acc += probs[static_cast<std::size_t>(i)];
    }
    return acc;
  }

  std::map<long, double> as_map() const {
    std::map<long, double> m;
    for (std::size_t i = 0; i < probs.size(); ++i)
      m[y_min + 2 * static_cast<long>(i)] = probs[i];
    return m;
  }
};

// Exact forward dynamic programming for the quenched kernel.
inline KernelSlice propagate_kernel(const Environment& env, long x, long s, long t) {
  require(t >= s, "propagate_kernel: t must be >= s");
  require(is_even_site(x, s), "propagate_kernel: origin parity mismatch");
  require(env.window().contains(x, s), "propagate_kernel: origin outside window");
  require(env.window().t_max >= t - 1 || t == s, "propagate_kernel: horizon outside window");
  KernelSlice slice;
  slice.origin_x = x;
  slice.origin_s = s;
  slice.horizon_t = t;
  const long n = t - s;
  std::vector<double> cur(static_cast<std::size_t>(n) + 1, 0.0), nxt;
  // position y = x - k + 2*i at time s + k
  cur[0] = 1.0;
  for (long k = 0; k < n; ++k) {
    nxt.assign(static_cast<std::size_t>(n) + 1, 0.0);
    for (long i = 0; i <= k; ++i) {
      const double mass = cur[static_cast<std::size_t>(i)];
      if (mass == 0.0) continue;
      const long y = x - k + 2 * i;
      const double w = env.omega(y, s + k);
      nxt[static_cast<std::size_t>(i) + 1] += mass * w;        // to y + 1
      nxt[static_cast<std::size_t>(i)] += mass * (1.0 - w);    // to y - 1
    }
    cur.swap(nxt);
  }
  slice.y_min = x - n;
  slice.probs = std::move(cur);
  return slice;
}

// Chapman-Kolmogorov composition: chain the s->u slice with u->t slices from
// each intermediate point.
inline KernelSlice compose(const Environment& env, const KernelSlice& first, long t) {
  require(t >= first.horizon_t, "compose: t must be >= intermediate horizon");
  KernelSlice out;
  out.origin_x = first.origin_x;
  out.origin_s = first.origin_s;
  out.horizon_t = t;
  const long n = t - first.origin_s;
  out.y_min = first.origin_x - n;
  out.probs.assign(static_cast<std::size_t>(n) + 1, 0.0);
  for (std::size_t i = 0; i < first.probs.size(); ++i) {
    const double mass = first.probs[i];
    if (mass == 0.0) continue;
    const long y = first.y_min + 2 * static_cast<long>(i);
    const KernelSlice leg = propagate_kernel(env, y, first.horizon_t, t);
    for (std::size_t j = 0; j < leg.probs.size(); ++j) {
      const long z = leg.y_min + 2 * static_cast<long>(j);
      out.probs[static_cast<std::size_t>((z - out.y_min) / 2)] += mass * leg.probs[j];
    }
  }
  return out;
}

// Backward recursion for the whole quenched mean field up to a fixed horizon:
// m(x, s) = E^w[X_t | X_s = x] for all s in [s_min, t], x in the cone.
class QuenchedMeanField {
 public:
  QuenchedMeanField(const Environment& env, long s_min, long t, long x_min, long x_max)
      : s_min_(s_min), t_(t), x_min_(x_min), x_max_(x_max) {
    require(t >= s_min, "QuenchedMeanField: t < s_min");
    const long height = t - s_min;
    const long width = x_max - x_min + 1;
    require(width >= 1, "QuenchedMeanField: empty x range");
    rows_.resize(static_cast<std::size_t>(height) + 1,
                 std::vector<double>(static_cast<std::size_t>(width), 0.0));
    for (long x = x_min; x <= x_max; ++x) rows_.back()[idx(x)] = static_cast<double>(x);
    for (long s = t - 1; s >= s_min; --s) {
      auto& row = rows_[static_cast<std::size_t>(s - s_min)];
      const auto& up = rows_[static_cast<std::size_t>(s - s_min + 1)];
      for (long x = x_min; x <= x_max; ++x) {
        if (!is_even_site(x, s)) continue;
        if (x - 1 < x_min || x + 1 > x_max) continue;  // cone edge, unused
        const double w = env.omega(x, s);
        row[idx(x)] = w * up[idx(x + 1)] + (1.0 - w) * up[idx(x - 1)];
      }
    }
  }

  double mean(long x, long s) const {
    require(s >= s_min_ && s <= t_, "QuenchedMeanField: s out of range");
    require(x >= x_min_ && x <= x_max_, "QuenchedMeanField: x out of range");
    return rows_[static_cast<std::size_t>(s - s_min_)][idx(x)];
  }

 private:
  std::size_t idx(long x) const { return static_cast<std::size_t>(x - x_min_); }
  long s_min_, t_, x_min_, x_max_;
  std::vector<std::vector<double>> rows_;
};

// P(X^1_k = X^2_k), k = 0..n-1, for two walkers in a common environment under
// the averaged law, started a (even) distance apart. Exact difference-chain
// dynamic programming: independent steps while apart, the joint two-walker
// step law while together.
inline std::vector<double> pair_collision_probability(const EnvDistribution& dist, int n,
                                                      long start_gap = 0) {
  dist.validate();
  require(n >= 1, "pair_collision_probability: n must be >= 1");
  require((start_gap & 1L) == 0, "pair_collision_probability: gap parity must be even");
  const double mu = dist.mean();
  const double ew2 = dist.second_moment();
  const double ew1mw = dist.e_w_one_minus_w();
  // apart: gap +2 / -2 with prob mu(1-mu) each, unchanged otherwise
  const double ap_move = mu * (1.0 - mu);
  const double ap_stay = 1.0 - 2.0 * ap_move;
  // together: split +2 / -2 with prob E[w(1-w)] each, stay with the rest
  const double to_move = ew1mw;
  const double to_stay = ew2 + (1.0 - 2.0 * mu + ew2);
  const long half = n + 1 + std::labs(start_gap) / 2;
  const std::size_t width = static_cast<std::size_t>(2 * half + 1);
  std::vector<double> cur(width, 0.0), nxt(width, 0.0);
  cur[static_cast<std::size_t>(half + start_gap / 2)] = 1.0;
  std::vector<double> p(static_cast<std::size_t>(n), 0.0);
  for (int k = 0; k < n; ++k) {
    p[static_cast<std::size_t>(k)] = cur[static_cast<std::size_t>(half)];
    std::fill(nxt.begin(), nxt.end(), 0.0);
    for (std::size_t i = 1; i + 1 < width; ++i) {
      const double mass = cur[i];
      if (mass == 0.0) continue;
      const bool together = (static_cast<long>(i) == half);
      const double mv = together ? to_move : ap_move;
      const double st = together ? to_stay : ap_stay;
      nxt[i + 1] += mass * mv;
      nxt[i - 1] += mass * mv;
      nxt[i] += mass * st;
    }
    cur.swap(nxt);
  }
  return p;
}

// E|D_k| for the same difference chain (oracle building block for the
// fluctuation covariances).
inline double pair_abs_gap_moment(const EnvDistribution& dist, int n, long start_gap) {
  dist.validate();
  require((start_gap & 1L) == 0, "pair_abs_gap_moment: gap parity must be even");
  const double mu = dist.mean();
  const double ew2 = dist.second_moment();
  const double ap_move = mu * (1.0 - mu);
  const double ap_stay = 1.0 - 2.0 * ap_move;
  const double to_move = dist.e_w_one_minus_w();
  const double to_stay = ew2 + (1.0 - 2.0 * mu + ew2);
  const long half = n + 1 + std::labs(start_gap) / 2;
  const std::size_t width = static_cast<std::size_t>(2 * half + 1);
  std::vector<double> cur(width, 0.0), nxt(width, 0.0);
  cur[static_cast<std::size_t>(half + start_gap / 2)] = 1.0;
  for (int k = 0; k < n; ++k) {
    std::fill(nxt.begin(), nxt.end(), 0.0);
    for (std::size_t i = 1; i + 1 < width; ++i) {
      const double mass = cur[i];
      if (mass == 0.0) continue;
      const bool together = (static_cast<long>(i) == half);
      const double mv = together ? to_move : ap_move;
      const double st = together ? to_stay : ap_stay;
      nxt[i + 1] += mass * mv;
      nxt[i - 1] += mass * mv;
      nxt[i] += mass * st;
    }
    cur.swap(nxt);
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < width; ++i)
    acc += cur[i] * 2.0 * std::fabs(static_cast<double>(static_cast<long>(i) - half));
  return acc;
}

// E|Y_n - target| for the annealed single walk from start (steps +1 with
// probability mu).
inline double single_walk_abs_moment(const EnvDistribution& dist, int n, long start, long target) {
  const double mu = dist.mean();
  const std::size_t width = static_cast<std::size_t>(2 * n + 1);
  std::vector<double> cur(width, 0.0), nxt(width, 0.0);
  cur[static_cast<std::size_t>(n)] = 1.0;  // offset from start
  for (int k = 0; k < n; ++k) {
    std::fill(nxt.begin(), nxt.end(), 0.0);
    for (std::size_t i = 0; i < width; ++i) {
      const double mass = cur[i];
      if (mass == 0.0) continue;
      if (i + 1 < width) nxt[i + 1] += mass * mu;
      if (i >= 1) nxt[i - 1] += mass * (1.0 - mu);
    }
    cur.swap(nxt);
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < width; ++i) {
    const long y = start + static_cast<long>(i) - n;
    acc += cur[i] * std::fabs(static_cast<double>(y - target));
  }
  return acc;
}

// ---------------------------------------------------------------------------
// Smoothing process
// ---------------------------------------------------------------------------

// Height function at lattice points of a fixed parity; zeta(x) defined for
// x in [x_min, x_max] with x = x_min + 2k.
struct SmoothingState {
  long time = 0;  // number of smoothing steps applied
  long x_min = 0;
  std::vector<double> zeta;

  double value(long x) const {
    require(x >= x_min && ((x - x_min) & 1L) == 0, "SmoothingState: x off support");
    const auto i = static_cast<std::size_t>((x - x_min) / 2);
    require(i < zeta.size(), "SmoothingState: x off support");
    return zeta[i];
  }
};

// zeta_t(x) = sum_y K_{-t,0}(x, y) zeta_0(y), computed by the one-step
// backward-in-start-time recursion
//   eta_u(x) = w_(x,-u) eta_{u-1}(x+1) + (1 - w_(x,-u)) eta_{u-1}(x-1).
// The support shrinks by one site per step (the reachable cone).
inline SmoothingState evolve_smoothing(const Environment& env, const SmoothingState& zeta0,
                                       long t) {
  require(t >= 0, "evolve_smoothing: t must be >= 0");
  require(static_cast<long>(zeta0.zeta.size()) >= t + 1,
          "evolve_smoothing: zeta0 must cover the reachable cone");
  SmoothingState cur = zeta0;
  for (long u = zeta0.time + 1; u <= zeta0.time + t; ++u) {
    SmoothingState nxt;
    nxt.time = u;
    nxt.x_min = cur.x_min + 1;
    nxt.zeta.resize(cur.zeta.size() - 1);
    for (std::size_t i = 0; i < nxt.zeta.size(); ++i) {
      const long x = nxt.x_min + 2 * static_cast<long>(i);
      const double w = env.omega(x, -u);
      nxt.zeta[i] = w * cur.zeta[i + 1] + (1.0 - w) * cur.zeta[i];
    }
    cur = std::move(nxt);
  }
  return cur;
}

struct CurrentIdentity {
  double lhs = 0.0;
  double rhs = 0.0;
  double gap = 0.0;
};

// Current of the dual height process across the segment from (x, 0) to
// (y, -t), with the dual kernel defined through the forward DP by
// K_dual_{0,-t}(z, (-inf, y]) = K_{-t,0}(y, [z, inf)). Exact identity:
// both sides agree up to roundoff for any finite atom set.
inline CurrentIdentity current_identity_check(const Environment& env,
                                              const std::map<long, double>& rho0, long x, long y,
                                              long t) {
  require(t >= 0, "current_identity_check: t must be >= 0");
  require(is_even_site(y, -t), "current_identity_check: (y,-t) parity mismatch");
  for (const auto& [z, m] : rho0) {
    require(is_even_site(z, 0), "current_identity_check: atom parity mismatch");
    require(m >= 0.0, "current_identity_check: rho0 must be a nonnegative measure");
  }
  const KernelSlice k = propagate_kernel(env, y, -t, 0);
  double lhs = 0.0;
  for (const auto& [z, m] : rho0) {
    if (z > x)
      lhs += m * k.tail_geq(z);
    else
      lhs -= m * (1.0 - k.tail_geq(z));
  }
  // rhs: zeta_t(y) - zeta_0(x), zeta_0 the height function of rho0
  auto height = [&rho0](long xx) {
    double h = 0.0;
    for (const auto& [z, m] : rho0)
      if (z <= xx) h += m;
    return h;
  };
  double zeta_t = 0.0;
  for (std::size_t i = 0; i < k.probs.size(); ++i) {
    const long w = k.y_min + 2 * static_cast<long>(i);
    zeta_t += k.probs[i] * height(w);
  }
  const double rhs = zeta_t - height(x);
  return {lhs, rhs, std::fabs(lhs - rhs)};
}

// ---------------------------------------------------------------------------
// Fluctuation observables
// ---------------------------------------------------------------------------

// Nearest integer with ties toward -infinity.
inline long round_half_down(double v) { return static_cast<long>(std::ceil(v - 0.5)); }

// Nearest integer of the parity of `t_parity` (ties toward -infinity).
inline long round_to_parity(double v, long t_parity) {
  long x = round_half_down(v);
  if (((x + t_parity) & 1L) != 0) {
    // pick the closer of x-1, x+1; ties toward -infinity
    x = (v - (static_cast<double>(x) - 1.0) <= (static_cast<double>(x) + 1.0) - v) ? x - 1 : x + 1;
  }
  return x;
}

struct FluctuationPoint {
  double t = 1.0;
  double r = 0.0;
};

struct FluctuationSample {
  long n = 0;
  std::vector<FluctuationPoint> points;
  std::vector<std::vector<double>> values;  // [replicate][point]
  std::uint64_t env_seed = 0;
};

// a_n(t, r) = n^{-1/4} (E^w[X_0 | start (x_s, -T)] - (x_s + beta T)): the
// centered quenched mean of the endpoint, exactly mean-zero over the
// environment. One fresh environment per replicate; all points share it.
inline FluctuationSample quenched_mean_fluctuations(const EnvDistribution& dist, long n,
                                                    const std::vector<FluctuationPoint>& points,
                                                    int replicates, std::uint64_t master_seed,
                                                    int jobs = 0) {
  dist.validate();
  require(n >= 1, "quenched_mean_fluctuations: n must be >= 1");
  require(!points.empty(), "quenched_mean_fluctuations: no points");
  const double beta = dist.drift();
  const double sqrt_n = std::sqrt(static_cast<double>(n));
  const double scale = std::pow(static_cast<double>(n), -0.25);
  FluctuationSample out;
  out.n = n;
  out.points = points;
  out.env_seed = master_seed;
  out.values.assign(static_cast<std::size_t>(replicates), {});

  struct Instance {
    long T;
    long x_start;
  };
  std::vector<Instance> inst;
  long t_max = 1;
  for (const auto& pt : points) {
    require(pt.t > 0.0, "quenched_mean_fluctuations: point t must be positive");
    const long T = std::max<long>(1, round_half_down(static_cast<double>(n) * pt.t));
    const long xs = round_to_parity(pt.r * sqrt_n - beta * static_cast<double>(n) * pt.t, T);
    inst.push_back({T, xs});
    t_max = std::max(t_max, T);
  }

  parallel_replicates(replicates, jobs > 0 ? jobs : default_jobs(), [&](int rep) {
    const std::uint64_t env_seed = mix_key(master_seed, static_cast<std::uint64_t>(rep));
    LatticeWindow win;
    long x_lo = inst[0].x_start, x_hi = inst[0].x_start;
    for (const auto& in : inst) {
      x_lo = std::min(x_lo, in.x_start - in.T);
      x_hi = std::max(x_hi, in.x_start + in.T);
    }
    win.x_min = x_lo - 1;
    win.x_max = x_hi + 1;
    win.t_min = -t_max;
    win.t_max = 0;
    Environment env(win, dist, env_seed);
    std::vector<double> row(points.size());
    for (std::size_t pi = 0; pi < inst.size(); ++pi) {
      const auto [T, xs] = inst[pi];
      // forward DP of the quenched occupation from (xs, -T) to time 0
      std::vector<double> cur(static_cast<std::size_t>(T) + 1, 0.0), nxt;
      cur[0] = 1.0;
      for (long k = 0; k < T; ++k) {
        nxt.assign(static_cast<std::size_t>(T) + 1, 0.0);
        for (long i = 0; i <= k; ++i) {
          const double mass = cur[static_cast<std::size_t>(i)];
          if (mass == 0.0) continue;
          const long xx = xs - k + 2 * i;
          const double w = env.omega_unchecked(xx, -T + k);
          nxt[static_cast<std::size_t>(i) + 1] += mass * w;
          nxt[static_cast<std::size_t>(i)] += mass * (1.0 - w);
        }
        cur.swap(nxt);
      }
      double m = 0.0;
      for (long i = 0; i <= T; ++i)
        m += cur[static_cast<std::size_t>(i)] * static_cast<double>(xs - T + 2 * i);
      row[pi] = scale * (m - (static_cast<double>(xs) + beta * static_cast<double>(T)));
    }
    out.values[static_cast<std::size_t>(rep)] = std::move(row);
  });
  return out;
}

enum class ProfileKind { kZero, kLinear, kSine };

// Initial macroscopic profile f plus Holder metadata. f_n(x) = n f(x/n).
struct InitialProfile {
  ProfileKind kind = ProfileKind::kZero;
  double slope = 0.0;      // linear: f(x) = slope * x
  double amplitude = 0.0;  // sine: f(x) = amplitude * sin(freq * x)
  double freq = 1.0;
  double x0 = 0.0;  // characteristic base point (macroscopic)

  double f(double x) const {
    switch (kind) {
      case ProfileKind::kZero: return 0.0;
      case ProfileKind::kLinear: return slope * x;
      case ProfileKind::kSine: return amplitude * std::sin(freq * x);
    }
    return 0.0;
  }
  double fprime(double x) const {
    switch (kind) {
      case ProfileKind::kZero: return 0.0;
      case ProfileKind::kLinear: return slope;
      case ProfileKind::kSine: return amplitude * freq * std::cos(freq * x);
    }
    return 0.0;
  }
};

// z_n(t, r) = n^{-1/4} { zeta_{nt}(n x0 + r sqrt(n) - beta n t) - zeta_0(n x0 + r sqrt(n)) }
// with zeta_0 = f_n + W, W a two-sided unit-step random walk, fresh per
// replicate and independent of the environment.
inline FluctuationSample current_fluctuations(const EnvDistribution& dist,
                                              const InitialProfile& profile, long n,
                                              const std::vector<FluctuationPoint>& points,
                                              int replicates, std::uint64_t master_seed,
                                              bool noise_on = true, int jobs = 0) {
  dist.validate();
  require(n >= 1, "current_fluctuations: n must be >= 1");
  require(!points.empty(), "current_fluctuations: no points");
  const double beta = dist.drift();
  const double sqrt_n = std::sqrt(static_cast<double>(n));
  const double scale = std::pow(static_cast<double>(n), -0.25);
  const double nx0 = static_cast<double>(n) * profile.x0;

  struct Instance {
    long T;
    long x_eval;  // argument of zeta_T (parity T)
    long x_ref;   // argument of zeta_0 (even)
  };
  std::vector<Instance> inst;
  long T_max = 1;
  for (const auto& pt : points) {
    require(pt.t > 0.0, "current_fluctuations: point t must be positive");
    const long T = std::max<long>(1, round_half_down(static_cast<double>(n) * pt.t));
    const long xe = round_to_parity(nx0 + pt.r * sqrt_n - beta * static_cast<double>(n) * pt.t, T);
    const long xr = round_to_parity(nx0 + pt.r * sqrt_n, 0);
    inst.push_back({T, xe, xr});
    T_max = std::max(T_max, T);
  }
  // zeta_0 support: all sites reachable at time 0 plus the reference points
  long x_lo = inst[0].x_ref, x_hi = inst[0].x_ref;
  for (const auto& in : inst) {
    x_lo = std::min({x_lo, in.x_eval - in.T, in.x_ref});
    x_hi = std::max({x_hi, in.x_eval + in.T, in.x_ref});
  }
  x_lo -= 2;
  x_hi += 2;

  FluctuationSample out;
  out.n = n;
  out.points = points;
  out.env_seed = master_seed;
  out.values.assign(static_cast<std::size_t>(replicates), {});

  parallel_replicates(replicates, jobs > 0 ? jobs : default_jobs(), [&](int rep) {
    const std::uint64_t env_seed = mix_key(master_seed, static_cast<std::uint64_t>(rep), 0x5a17UL);
    const std::uint64_t w_seed = mix_key(master_seed, static_cast<std::uint64_t>(rep), 0xb0b5UL);
    LatticeWindow win{x_lo - 1, x_hi + 1, -T_max, 0};
    Environment env(win, dist, env_seed);

    // two-sided unit-step walk W on integers, W(0) = 0
    const long lo = x_lo, hi = x_hi;
    std::vector<double> W(static_cast<std::size_t>(hi - lo + 1), 0.0);
    if (noise_on) {
      RngStream rng_pos(mix_key(w_seed, 1));
      RngStream rng_neg(mix_key(w_seed, 2));
      double acc = 0.0;
      for (long xx = 1; xx <= hi; ++xx) {
        acc += rng_pos.uniform() < 0.5 ? 1.0 : -1.0;
        if (xx >= lo) W[static_cast<std::size_t>(xx - lo)] = acc;
      }
      acc = 0.0;
      for (long xx = -1; xx >= lo; --xx) {
        acc += rng_neg.uniform() < 0.5 ? 1.0 : -1.0;
        W[static_cast<std::size_t>(xx - lo)] = acc;
      }
    }
    auto zeta0 = [&](long xx) {
      return static_cast<double>(n) * profile.f(static_cast<double>(xx) / static_cast<double>(n)) +
             W[static_cast<std::size_t>(xx - lo)];
    };

    // eta_u(x) = sum_y K_{-u,0}(x,y) zeta0(y); evolve on the even grid of
    // the full window and read off at each requested level.
    // Support at recursion depth u: x in [lo + u, hi - u], parity u.
    std::vector<double> cur(static_cast<std::size_t>(hi - lo + 1), 0.0), nxt;
    for (long xx = lo; xx <= hi; ++xx)
      if (((xx % 2) + 2) % 2 == 0) cur[static_cast<std::size_t>(xx - lo)] = zeta0(xx);
    std::vector<double> row(points.size(), 0.0);
    for (long u = 1; u <= T_max; ++u) {
      nxt.assign(cur.size(), 0.0);
      for (long xx = lo + u; xx <= hi - u; ++xx) {
        if (((xx + u) & 1L) != 0) continue;
        const double w = env.omega_unchecked(xx, -u);
        nxt[static_cast<std::size_t>(xx - lo)] =
            w * cur[static_cast<std::size_t>(xx + 1 - lo)] +
            (1.0 - w) * cur[static_cast<std::size_t>(xx - 1 - lo)];
      }
      cur.swap(nxt);
      for (std::size_t pi = 0; pi < inst.size(); ++pi)
        if (inst[pi].T == u)
          row[pi] = scale * (cur[static_cast<std::size_t>(inst[pi].x_eval - lo)] -
                             zeta0(inst[pi].x_ref));
    }
    out.values[static_cast<std::size_t>(rep)] = std::move(row);
  });
  return out;
}

// Exact covariance oracle for z_n with a linear profile (slope c) and
// unit-step initial noise:
//   Cov(z_i, z_j) = n^{-1/2} [ c^2 sigma0^2 sum_{k<T} p_k^{(ij)}
//                              + E_w Cov_W(zW_i, zW_j) ],
// the W part expressed through E|.| moments of the annealed single walk and
// the pair difference chain via cov_W(a, b) = (|a| + |b| - |a-b|)/2.
struct ZCovOracle {
  double dynamics = 0.0;
  double noise = 0.0;
  double total = 0.0;
};

inline ZCovOracle z_cov_oracle_linear(const EnvDistribution& dist, long n, double slope,
                                      const FluctuationPoint& pi, const FluctuationPoint& pj,
                                      bool noise_on = true) {
  require(pi.t == pj.t, "z_cov_oracle_linear: equal times only");
  const double beta = dist.drift();
  const double sqrt_n = std::sqrt(static_cast<double>(n));
  const long T = std::max<long>(1, round_half_down(static_cast<double>(n) * pi.t));
  const long xi = round_to_parity(pi.r * sqrt_n - beta * static_cast<double>(n) * pi.t, T);
  const long xj = round_to_parity(pj.r * sqrt_n - beta * static_cast<double>(n) * pj.t, T);
  const long ri = round_to_parity(pi.r * sqrt_n, 0);
  const long rj = round_to_parity(pj.r * sqrt_n, 0);
  const auto pk = pair_collision_probability(dist, static_cast<int>(T), xi - xj);
  double sum_pk = 0.0;
  for (double v : pk) sum_pk += v;
  ZCovOracle out;
  const double pref = 1.0 / sqrt_n;
  out.dynamics = pref * slope * slope * dist.sigma0_sq() * sum_pk;
  if (noise_on) {
    auto cmin = [](double a, double b, double gap) { return 0.5 * (a + b - gap); };
    const double Ei = single_walk_abs_moment(dist, static_cast<int>(T), xi, 0);
    const double Ej = single_walk_abs_moment(dist, static_cast<int>(T), xj, 0);
    const double Eij = pair_abs_gap_moment(dist, static_cast<int>(T), xi - xj);
    const double Ei_rj = single_walk_abs_moment(dist, static_cast<int>(T), xi, rj);
    const double Ej_ri = single_walk_abs_moment(dist, static_cast<int>(T), xj, ri);
    const double term_yy = cmin(Ei, Ej, Eij);
    const double term_y_rj = cmin(Ei, std::fabs(static_cast<double>(rj)), Ei_rj);
    const double term_y_ri = cmin(Ej, std::fabs(static_cast<double>(ri)), Ej_ri);
    const double term_rr =
        cmin(std::fabs(static_cast<double>(ri)), std::fabs(static_cast<double>(rj)),
             std::fabs(static_cast<double>(ri - rj)));
    out.noise = pref * (term_yy - term_y_rj - term_y_ri + term_rr);
  }
  out.total = out.dynamics + out.noise;
  return out;
}

}  // namespace hwflow
