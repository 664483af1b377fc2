// Pathwise simulation of the Howitt-Warren 2-point motion by its time-change
// construction.
//
// Scheme. The difference driver W (variance rate 2, started at x1-x2) is
// simulated on a uniform grid in its own clock u. Within each grid cell the
// semimartingale local time of W at 0 is drawn exactly from its bridge law:
//   l0 = max(0, sqrt((a-b)^2 + 2 sigma^2 h E) - |a| - |b|),  E ~ Exp(1),
// so the time change A_u = u + 2 nu L(u,0) needs no band estimator at all.
// L is kept in the normalization under which L(u,0) ~ |N(0,u)| for W from 0
// (L = l0 / sqrt(2)); the closed forms in analytics.hpp use the same
// convention, so simulated laws and formulas agree without any conversion.
//
// Each cell's A-increment is laid out as [h/2 diffusive | flat | h/2
// diffusive], the flat carrying the local-time part 2 nu dL. Sample times
// landing on the flat read W(T_s) = 0 exactly (the sticky state); times on a
// diffusive leg get a Gaussian bridge draw conditioned on everything drawn
// before them in the cell. The two symmetric drivers only enter through
// V(T_s)/2 + B3(S_s), an independent Gaussian accumulator with per-step
// variance dT/2 + dS, which is drawn directly.
#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "hwflow/analytics.hpp"
#include "hwflow/parallel.hpp"
#include "hwflow/path.hpp"
#include "hwflow/rng.hpp"

namespace hwflow {

struct TwoPointSummary {
  double x1_end = 0.0;
  double x2_end = 0.0;
  double meet_occupation = 0.0;  // grid measure of {|X1 - X2| <= bandwidth}
  double local_time = 0.0;       // Lambda(horizon, 0) of the difference
};

struct TwoPointSample {
  PathGrid x1_path;
  PathGrid x2_path;
  StickyParams params;
  double start_x1 = 0.0;
  double start_x2 = 0.0;
  double bandwidth = 0.0;
  TwoPointSummary summary;
};

namespace detail {

// Streaming core: one replicate of the coupled pair on the s-grid.
// mirror_difference flips the sign of every Gaussian increment that builds W
// (the antisymmetric driver), which is how swapping the two symmetric driver
// seeds acts on the construction; the resulting pair must be equal in law.
class TwoPointWalker {
 public:
  TwoPointWalker(double x1, double x2, const StickyParams& p, double dt, RngStream rng,
                 bool mirror_difference = false)
      : x1_(x1),
        w0_(x1 - x2),
        nu_(p.nu),
        beta_(p.beta),
        dt_(dt),
        rng_(rng),
        sign_(mirror_difference ? -1.0 : 1.0) {
    w_now_ = w0_;
    cell_left_w_ = w0_;
    open_cell();
  }

  // Advance one s-step. Afterwards the accessors refer to s = steps_done()*dt.
  void step() {
    ++m_;
    const double target = static_cast<double>(m_) * dt_;
    while (a_left_ + extent_ < target) close_cell_and_open_next();
    const double prog = target - a_left_;
    const double half = 0.5 * dt_;
    const double u_left = static_cast<double>(cell_) * dt_;
    double T;
    sticky_now_ = false;
    if (l0_ > 0.0) {
      const double fl = extent_ - dt_;
      if (prog <= half) {
        T = u_left + prog;
        lpc_now_ = lpc_left_;
        w_now_ = bridge_value(T, u_left + half, 0.0);
      } else if (prog <= half + fl) {
        T = u_left + half;
        lpc_now_ = lpc_left_ + (prog - half) / (2.0 * nu_);
        w_now_ = 0.0;
        sticky_now_ = true;
        anchor_u_ = T;
        anchor_w_ = 0.0;
      } else {
        T = u_left + prog - fl;
        lpc_now_ = lpc_left_ + l0_ * inv_sqrt2_;
        if (anchor_u_ < u_left + half) {
          anchor_u_ = u_left + half;
          anchor_w_ = 0.0;
        }
        w_now_ = bridge_value(T, u_left + dt_, cell_right_w_);
      }
    } else {
      T = u_left + prog;
      lpc_now_ = lpc_left_;
      w_now_ = bridge_value(T, u_left + dt_, cell_right_w_);
    }
    const double dT = std::max(T - T_prev_, 0.0);
    const double dS = std::max(dt_ - dT, 0.0);
    const double var = 0.5 * dT + dS;
    if (var > 0.0) c_acc_ += std::sqrt(var) * rng_.normal();
    T_prev_ = T;
  }

  double difference() const { return w_now_; }
  double x1() const {
    const double s = static_cast<double>(m_) * dt_;
    return x1_ + 0.5 * (w_now_ - w0_) + c_acc_ + beta_ * s;
  }
  double x2() const { return x1() - w_now_; }
  bool in_sticky_state() const { return sticky_now_; }
  double local_time() const { return lpc_now_; }
  int steps_done() const { return m_; }

 private:
  static constexpr double inv_sqrt2_ = 0.7071067811865475244;

  void open_cell() {
    const double step_sd = std::sqrt(2.0 * dt_);
    cell_right_w_ = cell_left_w_ + sign_ * step_sd * rng_.normal();
    const double a = cell_left_w_;
    const double b = cell_right_w_;
    const double e = rng_.exponential();
    const double root = std::sqrt((a - b) * (a - b) + 4.0 * dt_ * e);
    l0_ = root - std::fabs(a) - std::fabs(b);
    if (l0_ < 0.0) l0_ = 0.0;
    extent_ = dt_ + std::sqrt(2.0) * nu_ * l0_;
    anchor_u_ = static_cast<double>(cell_) * dt_;
    anchor_w_ = cell_left_w_;
  }

  void close_cell_and_open_next() {
    a_left_ += extent_;
    lpc_left_ += l0_ * inv_sqrt2_;
    ++cell_;
    cell_left_w_ = cell_right_w_;
    open_cell();
  }

  // Gaussian bridge draw of W at u in (anchor_u, right_u]; updates the anchor.
  double bridge_value(double u, double right_u, double right_w) {
    const double tiny = 1e-12 * dt_;
    if (u <= anchor_u_ + tiny) return anchor_w_;
    if (u >= right_u - tiny) {
      anchor_u_ = right_u;
      anchor_w_ = right_w;
      return right_w;
    }
    const double len = right_u - anchor_u_;
    const double fr = (u - anchor_u_) / len;
    const double mean = anchor_w_ + fr * (right_w - anchor_w_);
    const double var = 2.0 * (u - anchor_u_) * (right_u - u) / len;
    const double val = mean + sign_ * std::sqrt(var) * rng_.normal();
    anchor_u_ = u;
    anchor_w_ = val;
    return val;
  }

  double x1_, w0_, nu_, beta_, dt_;
  RngStream rng_;
  double sign_;

  int m_ = 0;
  int cell_ = 0;
  double cell_left_w_ = 0.0;
  double cell_right_w_ = 0.0;
  double l0_ = 0.0;      // exact semimartingale local time of W in the cell
  double extent_ = 0.0;  // A-increment of the cell: dt + sqrt(2) nu l0
  double a_left_ = 0.0;  // A at the cell's left edge
  double lpc_left_ = 0.0;
  double anchor_u_ = 0.0;
  double anchor_w_ = 0.0;
  double T_prev_ = 0.0;
  double c_acc_ = 0.0;  // V(T)/2 + B3(S)
  double w_now_ = 0.0;  // W(T_s)
  double lpc_now_ = 0.0;
  bool sticky_now_ = false;
};

}  // namespace detail

// Full-path sample (unit tests, CLI). Ensemble statistics should prefer
// two_point_summary below, which does not materialize paths.
inline TwoPointSample simulate_two_point(double x1, double x2, const StickyParams& params,
                                         double dt, double horizon, double bandwidth,
                                         SeedRecord seed) {
  params.validate();
  require(dt > 0.0 && horizon >= dt, "simulate_two_point: need 0 < dt <= horizon");
  require(bandwidth > 0.0, "simulate_two_point: bandwidth must be positive");
  const auto n = static_cast<std::size_t>(std::llround(horizon / dt));
  detail::TwoPointWalker w(x1, x2, params, dt,
                           RngStream::substream(seed.master, seed.stream));
  TwoPointSample out;
  out.params = params;
  out.start_x1 = x1;
  out.start_x2 = x2;
  out.bandwidth = bandwidth;
  out.x1_path.dt = dt;
  out.x2_path.dt = dt;
  out.x1_path.seed = seed;
  out.x2_path.seed = seed;
  out.x1_path.values.resize(n + 1);
  out.x2_path.values.resize(n + 1);
  out.x1_path.values[0] = x1;
  out.x2_path.values[0] = x2;
  double meet = 0.0;
  for (std::size_t k = 1; k <= n; ++k) {
    w.step();
    out.x1_path.values[k] = w.x1();
    out.x2_path.values[k] = w.x2();
    if (std::fabs(w.difference()) <= bandwidth) meet += dt;
  }
  out.summary = {out.x1_path.values[n], out.x2_path.values[n], meet, w.local_time()};
  return out;
}

// Grid measure of {s : |X1_s - X2_s| <= bandwidth} recomputed from a stored
// sample (possibly at a different bandwidth than the simulation default).
inline double meet_occupation_time(const TwoPointSample& sample, double bandwidth) {
  require(bandwidth > 0.0, "meet_occupation_time: bandwidth must be positive");
  double meet = 0.0;
  for (std::size_t k = 1; k < sample.x1_path.values.size(); ++k)
    if (std::fabs(sample.x1_path.values[k] - sample.x2_path.values[k]) <= bandwidth)
      meet += sample.x1_path.dt;
  return meet;
}

// One replicate, summary only.
inline TwoPointSummary two_point_summary(double x1, double x2, const StickyParams& params,
                                         double dt, double horizon, double bandwidth,
                                         RngStream rng, bool mirror_difference = false) {
  const auto n = static_cast<std::size_t>(std::llround(horizon / dt));
  detail::TwoPointWalker w(x1, x2, params, dt, rng, mirror_difference);
  double meet = 0.0;
  for (std::size_t k = 1; k <= n; ++k) {
    w.step();
    if (std::fabs(w.difference()) <= bandwidth) meet += dt;
  }
  return {w.x1(), w.x2(), meet, w.local_time()};
}

// Monte Carlo profile of P(E_k), E_k = {the difference visits 0 during
// (k t_block, (k+1) t_block]}. Visits are detected as sticky-state flats or
// grid values within the bandwidth. Only the difference driver matters here;
// the symmetric accumulator is still advanced so the path law is unchanged.
inline std::vector<double> return_probability_profile(const StickyParams& params, double t_block,
                                                      int n_blocks, int replicates, double dt,
                                                      double bandwidth, std::uint64_t master_seed,
                                                      int jobs = 0) {
  params.validate();
  require(n_blocks >= 2, "return_probability_profile: need at least two blocks");
  require(t_block > 0.0 && dt > 0.0 && dt <= t_block, "return_probability_profile: bad grid");
  require(replicates >= 1, "return_probability_profile: need replicates");
  const auto steps_per_block = static_cast<std::size_t>(std::llround(t_block / dt));
  std::vector<std::uint8_t> hit_flags(static_cast<std::size_t>(replicates) *
                                          static_cast<std::size_t>(n_blocks),
                                      0);
  parallel_replicates(replicates, jobs > 0 ? jobs : default_jobs(), [&](int rep) {
    detail::TwoPointWalker w(0.0, 0.0, params, dt,
                             RngStream::substream(master_seed, static_cast<std::uint64_t>(rep)));
    auto* flags = &hit_flags[static_cast<std::size_t>(rep) * static_cast<std::size_t>(n_blocks)];
    for (int blk = 0; blk < n_blocks; ++blk) {
      bool hit = false;
      for (std::size_t j = 0; j < steps_per_block; ++j) {
        w.step();
        if (w.in_sticky_state() || std::fabs(w.difference()) <= bandwidth) hit = true;
      }
      flags[blk] = hit ? 1 : 0;
    }
  });
  std::vector<double> hits(static_cast<std::size_t>(n_blocks), 0.0);
  for (int rep = 0; rep < replicates; ++rep)
    for (int blk = 0; blk < n_blocks; ++blk)
      hits[static_cast<std::size_t>(blk)] +=
          hit_flags[static_cast<std::size_t>(rep) * static_cast<std::size_t>(n_blocks) + blk];
  for (auto& h : hits) h /= static_cast<double>(replicates);
  return hits;
}

}  // namespace hwflow
