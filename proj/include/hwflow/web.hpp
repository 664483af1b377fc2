// Sampled discrete webs (coalescing arrow configurations) and their duals.
#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "hwflow/environment.hpp"
#include "hwflow/rng.hpp"

namespace hwflow {

// One arrow per even site in the window: true = right ((x,t) -> (x+1,t+1)).
struct ArrowConfig {
  LatticeWindow window;
  std::vector<std::uint8_t> right;  // indexed by site_index over even sites

  std::size_t site_index(long x, long t) const {
    const long row = t - window.t_min;
    const long col = x - window.x_min;
    return static_cast<std::size_t>(row * (window.x_max - window.x_min + 1) + col);
  }
  bool is_right(long x, long t) const { return right[site_index(x, t)] != 0; }
};

// Dual arrows live on odd sites (x, t+1) above even sites (x, t):
// true = right ((x,t+1) -> (x+1,t)).
struct DualArrowConfig {
  LatticeWindow window;  // window of the underlying forward web
  std::vector<std::uint8_t> right;

  std::size_t site_index(long x, long t_plus_1) const {
    const long row = (t_plus_1 - 1) - window.t_min;
    const long col = x - window.x_min;
    return static_cast<std::size_t>(row * (window.x_max - window.x_min + 1) + col);
  }
  bool is_right(long x, long t_plus_1) const { return right[site_index(x, t_plus_1)] != 0; }
};

// One coalescing-walk arrow per even site: right with probability omega there.
inline ArrowConfig sample_web(const Environment& env, std::uint64_t seed) {
  ArrowConfig web;
  web.window = env.window();
  const long w = web.window.x_max - web.window.x_min + 1;
  const long h = web.window.t_max - web.window.t_min + 1;
  web.right.assign(static_cast<std::size_t>(w * h), 0);
  for (long t = web.window.t_min; t <= web.window.t_max; ++t)
    for (long x = web.window.x_min; x <= web.window.x_max; ++x) {
      if (!is_even_site(x, t)) continue;
      std::uint64_t k = mix_key(seed, static_cast<std::uint64_t>(x), static_cast<std::uint64_t>(t));
      const double u = static_cast<double>(splitmix64(k) >> 11) * 0x1.0p-53;
      web.right[web.site_index(x, t)] = (u < env.omega_unchecked(x, t)) ? 1 : 0;
    }
  return web;
}

// The coupled dual: the backward walk at (x, t+1) steps to (x-1, t) exactly
// when the forward walk at (x, t) steps right, and to (x+1, t) otherwise.
inline DualArrowConfig build_dual_web(const ArrowConfig& web) {
  DualArrowConfig dual;
  dual.window = web.window;
  dual.right.assign(web.right.size(), 0);
  for (long t = web.window.t_min; t <= web.window.t_max; ++t)
    for (long x = web.window.x_min; x <= web.window.x_max; ++x) {
      if (!is_even_site(x, t)) continue;
      dual.right[dual.site_index(x, t + 1)] = web.is_right(x, t) ? 0 : 1;
    }
  return dual;
}

struct CrossingWitness {
  long x = 0;
  long t = 0;
};

// Non-crossing of the forward and dual path families. Paths are piecewise
// linear between integer times; within one time slab the only segment pair
// that can intersect transversally is a forward arrow from (x,t) and the dual
// arrow at (x,t+1) pointing the same way, so the path-level property is
// equivalent to the local rule checked here. Returns a witness site on
// failure.
inline std::optional<CrossingWitness> check_noncrossing(const ArrowConfig& web,
                                                        const DualArrowConfig& dual) {
  for (long t = web.window.t_min; t <= web.window.t_max; ++t)
    for (long x = web.window.x_min; x <= web.window.x_max; ++x) {
      if (!is_even_site(x, t)) continue;
      const bool fwd_right = web.is_right(x, t);
      const bool dual_right = dual.is_right(x, t + 1);
      if (fwd_right == dual_right) return CrossingWitness{x, t};
    }
  return std::nullopt;
}

// Follow forward arrows from (x, t0) for `steps` steps (clamped at the
// window edge); used by path-level tests.
inline std::vector<long> forward_path(const ArrowConfig& web, long x, long t0, long steps) {
  std::vector<long> path{x};
  long cx = x;
  for (long k = 0; k < steps; ++k) {
    const long t = t0 + k;
    if (t > web.window.t_max || cx - 1 < web.window.x_min || cx + 1 > web.window.x_max) break;
    cx += web.is_right(cx, t) ? 1 : -1;
    path.push_back(cx);
  }
  return path;
}

// Follow dual arrows downward from the odd site (x, t1).
inline std::vector<long> dual_path(const DualArrowConfig& dual, long x, long t1, long steps) {
  std::vector<long> path{x};
  long cx = x;
  for (long k = 0; k < steps; ++k) {
    const long t = t1 - k;
    if (t - 1 < dual.window.t_min || cx - 1 < dual.window.x_min || cx + 1 > dual.window.x_max)
      break;
    cx += dual.is_right(cx, t) ? 1 : -1;
    path.push_back(cx);
  }
  return path;
}

}  // namespace hwflow
