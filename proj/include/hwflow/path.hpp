// Uniformly sampled paths, grid local-time estimators, and the sticky time
// change A_u = u + 2 nu L(u,0) with its monotone inverse.
#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "hwflow/common.hpp"
#include "hwflow/rng.hpp"

namespace hwflow {

struct SeedRecord {
  std::uint64_t master = 0;
  std::uint64_t stream = 0;  // substream id (replicate index, driver id, ...)
};

// A path sampled on the uniform grid t0 + k*dt, k = 0..(values.size()-1).
struct PathGrid {
  double dt = 0.0;
  double t0 = 0.0;
  std::vector<double> values;
  SeedRecord seed;

  double horizon() const { return dt * static_cast<double>(values.size() - 1); }
};

// Brownian motion with E[(X_{t+dt}-X_t)^2] = variance_rate * dt.
inline PathGrid simulate_bm(double x0, double variance_rate, double dt, double horizon,
                            SeedRecord seed) {
  require_finite(x0, "x0");
  require(variance_rate >= 0.0, "simulate_bm: variance_rate must be >= 0");
  require(dt > 0.0 && horizon > 0.0, "simulate_bm: dt and horizon must be positive");
  require(dt <= horizon, "simulate_bm: dt must not exceed horizon");
  const auto n = static_cast<std::size_t>(std::llround(horizon / dt));
  RngStream rng = RngStream::substream(seed.master, seed.stream);
  PathGrid path;
  path.dt = dt;
  path.t0 = 0.0;
  path.seed = seed;
  path.values.resize(n + 1);
  path.values[0] = x0;
  const double step_sd = std::sqrt(variance_rate * dt);
  for (std::size_t k = 1; k <= n; ++k)
    path.values[k] = path.values[k - 1] + step_sd * rng.normal();
  return path;
}

enum class LocalTimeEstimator { kEpsilonOccupation, kCrossingCount };

// Nondecreasing local-time path at a fixed level, normalized so that
// sigma^2 int f(B_s) ds = 2 int f(x) L(t,x) dx holds in expectation
// (for a standard Brownian motion from the level, E L(t) = sqrt(t / 2 pi)).
struct LocalTimePath {
  double dt = 0.0;
  std::vector<double> values;
  LocalTimeEstimator estimator = LocalTimeEstimator::kEpsilonOccupation;
  double bandwidth = 0.0;
};

// Band-occupation estimator L(t) = (variance_rate / 4 eps) * |{s <= t : |X_s - level| <= eps}|.
// The t=0 sample is excluded so L(0) = 0 exactly.
inline LocalTimePath estimate_local_time(const PathGrid& path, double level, double variance_rate,
                                         double bandwidth,
                                         LocalTimeEstimator estimator =
                                             LocalTimeEstimator::kEpsilonOccupation) {
  require(bandwidth > 0.0, "estimate_local_time: bandwidth must be positive");
  require(variance_rate > 0.0, "estimate_local_time: variance_rate must be positive");
  require(!path.values.empty(), "estimate_local_time: empty path");
  LocalTimePath lt;
  lt.dt = path.dt;
  lt.estimator = estimator;
  lt.bandwidth = bandwidth;
  lt.values.resize(path.values.size());
  lt.values[0] = 0.0;
  if (estimator == LocalTimeEstimator::kEpsilonOccupation) {
    const double w = variance_rate / (4.0 * bandwidth) * path.dt;
    for (std::size_t k = 1; k < path.values.size(); ++k) {
      const bool in_band = std::fabs(path.values[k] - level) <= bandwidth;
      lt.values[k] = lt.values[k - 1] + (in_band ? w : 0.0);
    }
  } else {
    // Level-crossing counter: each sign change of X - level contributes
    // sigma sqrt(pi dt / 2) / 2, which matches the occupation normalization
    // in expectation for small dt.
    const double w = std::sqrt(variance_rate) * std::sqrt(1.5707963267948966 * path.dt) / 2.0;
    for (std::size_t k = 1; k < path.values.size(); ++k) {
      const double prev = path.values[k - 1] - level;
      const double cur = path.values[k] - level;
      const bool crossed = (prev > 0.0 && cur < 0.0) || (prev < 0.0 && cur > 0.0);
      lt.values[k] = lt.values[k - 1] + (crossed ? w : 0.0);
    }
  }
  return lt;
}

// The pair A_u = u + 2 nu L(u), T = A^{-1} (piecewise-linear inversion back
// onto the uniform grid), S = t - T.
struct TimeChange {
  double dt = 0.0;
  std::vector<double> A;
  std::vector<double> T;
  std::vector<double> S;
};

inline TimeChange build_time_change(const LocalTimePath& lt, double nu) {
  require(nu > 0.0 && std::isfinite(nu), "build_time_change: nu must be positive");
  require(lt.values.size() >= 2, "build_time_change: need at least two grid points");
  const std::size_t n = lt.values.size();
  for (std::size_t k = 1; k < n; ++k)
    if (lt.values[k] < lt.values[k - 1])
      throw invariant_error("build_time_change: local time must be nondecreasing");
  TimeChange tc;
  tc.dt = lt.dt;
  tc.A.resize(n);
  tc.T.resize(n);
  tc.S.resize(n);
  for (std::size_t k = 0; k < n; ++k)
    tc.A[k] = static_cast<double>(k) * lt.dt + 2.0 * nu * lt.values[k];
  // invert: T(t_k) solves A(T) = t_k; A is strictly increasing with A(u) >= u,
  // so every grid time t_k <= horizon has a preimage in [0, t_k].
  tc.T[0] = 0.0;
  tc.S[0] = 0.0;
  std::size_t j = 0;
  for (std::size_t k = 1; k < n; ++k) {
    const double target = static_cast<double>(k) * lt.dt;
    while (j + 1 < n && tc.A[j + 1] < target) ++j;
    const double da = tc.A[j + 1] - tc.A[j];
    const double frac = (da > 0.0) ? (target - tc.A[j]) / da : 0.0;
    tc.T[k] = (static_cast<double>(j) + std::min(std::max(frac, 0.0), 1.0)) * lt.dt;
    tc.S[k] = std::max(target - tc.T[k], 0.0);
  }
  return tc;
}

// A(t) evaluated by linear interpolation on the stored grid (for round-trip
// checks |A(T(t)) - t| <= dt).
inline double eval_piecewise(const std::vector<double>& ys, double dt, double t) {
  if (t <= 0.0) return ys.front();
  const double pos = t / dt;
  const auto k = static_cast<std::size_t>(pos);
  if (k + 1 >= ys.size()) return ys.back();
  const double frac = pos - static_cast<double>(k);
  return ys[k] + frac * (ys[k + 1] - ys[k]);
}

}  // namespace hwflow
