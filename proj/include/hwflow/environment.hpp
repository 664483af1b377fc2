// Space-time i.i.d. environments on the even lattice.
//
// Site values are pure functions of (seed, x, t): each site draws from its own
// hashed stream, so a value never depends on the window through which the
// environment is viewed. Serialization stores only (window, dist, seed).
#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "hwflow/common.hpp"
#include "hwflow/rng.hpp"

namespace hwflow {

enum class EnvKind { kDeterministic, kBeta, kTwoPoint };

struct EnvDistribution {
  EnvKind kind = EnvKind::kBeta;
  double a = 2.0;       // beta(a, b)
  double b = 2.0;
  double p = 0.5;       // deterministic value, or first atom of two_point
  double q = 0.5;       // second atom
  double weight = 0.5;  // P(omega = p) for two_point

  void validate() const {
    switch (kind) {
      case EnvKind::kDeterministic:
        require(p >= 0.0 && p <= 1.0, "EnvDistribution: p must lie in [0,1]");
        break;
      case EnvKind::kBeta:
        require(a > 0.0 && b > 0.0, "EnvDistribution: beta parameters must be positive");
        break;
      case EnvKind::kTwoPoint:
        require(p >= 0.0 && p <= 1.0 && q >= 0.0 && q <= 1.0, "EnvDistribution: atoms in [0,1]");
        require(weight >= 0.0 && weight <= 1.0, "EnvDistribution: weight in [0,1]");
        break;
    }
  }

  double mean() const {
    switch (kind) {
      case EnvKind::kDeterministic: return p;
      case EnvKind::kBeta: return a / (a + b);
      case EnvKind::kTwoPoint: return weight * p + (1.0 - weight) * q;
    }
    return 0.0;
  }

  double second_moment() const {
    switch (kind) {
      case EnvKind::kDeterministic: return p * p;
      case EnvKind::kBeta: {
        const double m = mean();
        return m * m + a * b / ((a + b) * (a + b) * (a + b + 1.0));
      }
      case EnvKind::kTwoPoint: return weight * p * p + (1.0 - weight) * q * q;
    }
    return 0.0;
  }

  double variance() const { return second_moment() - mean() * mean(); }
  double e_w_one_minus_w() const { return mean() - second_moment(); }
  // One-step drift of the averaged walk and the variance of the one-step
  // quenched mean (the constants of the second-moment identity).
  double drift() const { return 2.0 * mean() - 1.0; }
  double sigma0_sq() const { return 4.0 * variance(); }
};

namespace detail {

// beta(2,2) has CDF 3x^2 - 2x^3; invert by safeguarded Newton (exact trig
// solution exists but is slower in the DP hot loops).
inline double beta22_inverse_cdf_newton(double u) {
  double lo = 0.0, hi = 1.0, x = u;
  for (int it = 0; it < 60; ++it) {
    const double f = x * x * (3.0 - 2.0 * x) - u;
    if (f == 0.0) return x;
    if (f > 0.0)
      hi = x;
    else
      lo = x;
    const double d = 6.0 * x * (1.0 - x);
    double nx = (d > 1e-12) ? x - f / d : 0.5 * (lo + hi);
    if (!(nx > lo && nx < hi)) nx = 0.5 * (lo + hi);
    if (std::fabs(nx - x) <= 1e-16 + 1e-15 * x) return nx;
    x = nx;
  }
  return x;
}

// Hot-loop variant: tabulated inverse plus two Newton polish steps (the CDF
// is smooth and the polish is quadratic, giving full double precision).
inline double beta22_inverse_cdf(double u) {
  static constexpr int kTableSize = 4097;
  struct Table {
    double v[kTableSize];
    Table() {
      for (int i = 0; i < kTableSize; ++i)
        v[i] = beta22_inverse_cdf_newton(static_cast<double>(i) / (kTableSize - 1));
    }
  };
  static const Table table;
  // sqrt-like endpoints: the tabulated start is poor there, use the exact
  // Newton route (0.02% of draws)
  if (u < 1e-4 || u > 1.0 - 1e-4) return beta22_inverse_cdf_newton(u);
  const double pos = u * (kTableSize - 1);
  const int i = std::min(static_cast<int>(pos), kTableSize - 2);
  const double frac = pos - i;
  double x = table.v[i] * (1.0 - frac) + table.v[i + 1] * frac;
  // four polish steps cover the sqrt-like endpoints to ~1e-13
  for (int it = 0; it < 4; ++it) {
    const double f = x * x * (3.0 - 2.0 * x) - u;
    const double d = 6.0 * x * (1.0 - x);
    if (d > 1e-9) x -= f / d;
  }
  if (x < 0.0) x = 0.0;
  if (x > 1.0) x = 1.0;
  return x;
}

// Marsaglia-Tsang gamma(alpha >= 1) sampler on a dedicated stream.
inline double gamma_mt(RngStream& rng, double alpha) {
  const double d = alpha - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = rng.normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = rng.uniform_pos();
    if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v)) return d * v;
  }
}

inline double gamma_sample(RngStream& rng, double alpha) {
  if (alpha >= 1.0) return gamma_mt(rng, alpha);
  // boost: gamma(a) = gamma(a+1) * U^{1/a}
  const double g = gamma_mt(rng, alpha + 1.0);
  return g * std::pow(rng.uniform_pos(), 1.0 / alpha);
}

}  // namespace detail

struct LatticeWindow {
  long x_min = 0, x_max = 0, t_min = 0, t_max = 0;

  bool contains(long x, long t) const {
    return x >= x_min && x <= x_max && t >= t_min && t <= t_max;
  }
  bool empty() const { return x_min > x_max || t_min > t_max; }
};

inline bool is_even_site(long x, long t) { return ((x + t) & 1L) == 0; }

class Environment {
 public:
  Environment(LatticeWindow window, EnvDistribution dist, std::uint64_t seed)
      : window_(window), dist_(dist), seed_(seed) {
    require(!window.empty(), "Environment: empty window");
    dist.validate();
  }

  // omega at an even site; i.i.d. across sites, reproducible per (seed,x,t).
  double omega(long x, long t) const {
    require(is_even_site(x, t), "Environment: site parity must be even");
    require(window_.contains(x, t), "Environment: site outside window");
    return omega_unchecked(x, t);
  }

  double omega_unchecked(long x, long t) const {
    switch (dist_.kind) {
      case EnvKind::kDeterministic:
        return dist_.p;
      case EnvKind::kBeta:
        if (dist_.a == 2.0 && dist_.b == 2.0)
          return detail::beta22_inverse_cdf(site_uniform(x, t));
        else {
          RngStream rng(site_key(x, t));
          const double g1 = detail::gamma_sample(rng, dist_.a);
          const double g2 = detail::gamma_sample(rng, dist_.b);
          return g1 / (g1 + g2);
        }
      case EnvKind::kTwoPoint:
        return site_uniform(x, t) < dist_.weight ? dist_.p : dist_.q;
    }
    return 0.0;
  }

  const LatticeWindow& window() const { return window_; }
  const EnvDistribution& dist() const { return dist_; }
  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t site_key(long x, long t) const {
    return mix_key(seed_, static_cast<std::uint64_t>(x), static_cast<std::uint64_t>(t));
  }
  double site_uniform(long x, long t) const {
    std::uint64_t s = site_key(x, t);
    return static_cast<double>(splitmix64(s) >> 11) * 0x1.0p-53;
  }

  LatticeWindow window_;
  EnvDistribution dist_;
  std::uint64_t seed_;
};

}  // namespace hwflow
