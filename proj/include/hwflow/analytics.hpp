// Closed-form laws and covariance kernels of the Howitt-Warren two-point
// motion, plus quadrature evaluation of the kernels that have no elementary
// antiderivative.
//
// Conventions. The difference of the two coupled motions is a sticky Brownian
// motion: a variance-rate-2 Brownian motion W time-changed through
// A_u = u + 2 nu L(u,0). All formulas below use the local-time normalization
// under which L(u,0) of W started at 0 is distributed as |N(0,u)|; the
// simulation module builds its time change with the same convention, so the
// closed forms here describe the simulated process exactly.
#pragma once

#include <cmath>

#include "hwflow/common.hpp"
#include "hwflow/quadrature.hpp"
#include "hwflow/special.hpp"

namespace hwflow {

struct StickyParams {
  double nu = 1.0;   // stickiness, units of sqrt(time)
  double beta = 0.0; // common drift

  void validate() const {
    require_finite(beta, "beta");
    require(nu > 0.0 && std::isfinite(nu), "StickyParams: nu must be in (0, inf)");
  }
};

struct SpaceTimePoint {
  double t = 0.0;
  double r = 0.0;

  void validate() const {
    require_finite(r, "r");
    require(t >= 0.0 && std::isfinite(t), "SpaceTimePoint: t must be >= 0");
  }
};

inline double std_normal_cdf(double x) {
  require_finite(x, "x");
  return norm_cdf(x);
}

// P(tau > t) for the first passage to 0 of the variance-rate-2 difference
// motion started at x. Zero when started at the origin.
inline double first_passage_tail(double x, double t) {
  require_finite(x, "x");
  require(t > 0.0 && std::isfinite(t), "first_passage_tail: t must be positive");
  return 2.0 * norm_cdf(std::fabs(x) / std::sqrt(2.0 * t)) - 1.0;
}

namespace detail {

// First-passage density of the variance-rate-2 motion from x (x != 0).
inline double first_passage_density(double x, double s) {
  const double ax = std::fabs(x);
  return ax * std::exp(-x * x / (4.0 * s)) / (2.0 * std::sqrt(3.14159265358979323846 * s) * s);
}

}  // namespace detail

// P(Lambda_{x0}(t,0) > u): tail of the sticky local time at the origin at
// time t, difference started at x0. Derived by inverting the time change:
// P(Lambda(t) > u) = P(L(t - 2 nu u) > u), zero once 2 nu u >= t.
inline double local_time_tail(double u, double t, double nu, double x0) {
  require(u >= 0.0 && std::isfinite(u), "local_time_tail: u must be >= 0");
  require(t > 0.0 && std::isfinite(t), "local_time_tail: t must be positive");
  require(nu > 0.0 && std::isfinite(nu), "local_time_tail: nu must be positive");
  require_finite(x0, "x0");
  const double rem = t - 2.0 * nu * u;
  if (rem <= 0.0) return 0.0;
  const double sqrt2 = 1.4142135623730950488;
  return 2.0 - 2.0 * norm_cdf((std::fabs(x0) + sqrt2 * u) / std::sqrt(2.0 * rem));
}

// E[Lambda_0(t,0)] for the sticky difference started together:
//   sqrt(2 t / pi) + nu * (2 e^{t/2nu^2}[1 - Phi(sqrt(t)/nu)] - 1),
// with the exponential-times-tail product evaluated in scaled form.
inline double mean_local_time_zero(double t, double nu) {
  require(t >= 0.0 && std::isfinite(t), "mean_local_time_zero: t must be >= 0");
  require(nu > 0.0 && std::isfinite(nu), "mean_local_time_zero: nu must be positive");
  static const double sqrt_2_over_pi = 0.7978845608028653559;
  return sqrt_2_over_pi * std::sqrt(t) + nu * (scaled_gauss_tail(std::sqrt(t) / nu) - 1.0);
}

// G(x,t), the principal covariance kernel. The defining integral
//   sqrt(2) nu int_0^{2t/x^2} sqrt(2t - x^2 s) / (pi s^{3/2}) e^{-1/2s} ds
// is evaluated after the substitutions s = 1/v^2, v = sqrt(a^2 + y^2)
// (a = |x|/sqrt(2t)), which remove both the essential singularity at s -> 0
// and the square-root endpoint:
//   G(x,t) = (2 sqrt(2) nu sqrt(2t) / pi) e^{-a^2/2}
//            int_0^inf y^2/(a^2+y^2) e^{-y^2/2} dy.
inline double cov_G(double x, double t, double nu,
                    const QuadratureSpec& spec = QuadratureSpec{}) {
  require_finite(x, "x");
  require(t >= 0.0 && std::isfinite(t), "cov_G: t must be >= 0");
  require(nu > 0.0 && std::isfinite(nu), "cov_G: nu must be positive");
  static const double pi = 3.14159265358979323846;
  if (t == 0.0) return 0.0;
  const double a = std::fabs(x) / std::sqrt(2.0 * t);
  const double a2 = a * a;
  auto integrand = [a2](double y) { return y * y / (a2 + y * y) * std::exp(-0.5 * y * y); };
  // Gaussian factor is below 1e-18 of its peak past y = 9.5.
  const QuadratureResult q = integrate(integrand, 0.0, 9.5, spec);
  return 2.0 * std::sqrt(2.0) * nu * std::sqrt(2.0 * t) / pi * std::exp(-0.5 * a2) * q.value;
}

// H(x,t), the bounded correction kernel:
//   2 nu^2 int_0^t {2 e^{(t-s)/2nu^2}[1-Phi(sqrt(t-s)/nu)] - 1} P(tau in ds),
// with P(tau in ds) the variance-rate-2 first-passage density from x. The
// substitution s = x^2 / (2 v^2) turns the measure into 2 phi(v) dv on
// [|x|/sqrt(2t), inf). At x = 0 the passage time is 0 and the integral
// collapses to the bracket at s = 0.
inline double cov_H(double x, double t, double nu,
                    const QuadratureSpec& spec = QuadratureSpec{}) {
  require_finite(x, "x");
  require(t >= 0.0 && std::isfinite(t), "cov_H: t must be >= 0");
  require(nu > 0.0 && std::isfinite(nu), "cov_H: nu must be positive");
  if (t == 0.0) return 0.0;
  const double nu2 = nu * nu;
  if (x == 0.0) return 2.0 * nu2 * (scaled_gauss_tail(std::sqrt(t) / nu) - 1.0);
  const double a = std::fabs(x) / std::sqrt(2.0 * t);
  const double x2 = x * x;
  auto integrand = [&](double v) {
    const double s = x2 / (2.0 * v * v);
    const double rem = t - s;
    const double bracket = scaled_gauss_tail(std::sqrt(std::max(rem, 0.0)) / nu) - 1.0;
    return bracket * 2.0 * norm_pdf(v);
  };
  const QuadratureResult q = integrate(integrand, a, a + 9.5, spec);
  return 2.0 * nu2 * q.value;
}

// Gamma((t,r),(s,q)) = nu int_{|t-s|}^{t+s} e^{-(r-q)^2/2u} / sqrt(pi u) du.
// The integrand has the elementary antiderivative
//   (1/sqrt(pi)) [ 2 sqrt(u) e^{-c^2/u} - 2 c sqrt(pi) erfc(c / sqrt(u)) ],
// c = |r-q|/sqrt(2), so the kernel is evaluated in closed form. The
// quadrature route through cov_G stays available as an independent check
// (Gamma((t,x1),(t,x2)) = G(x1-x2, t)).
inline double gamma_cov(const SpaceTimePoint& p, const SpaceTimePoint& q, double nu) {
  p.validate();
  q.validate();
  require(nu > 0.0 && std::isfinite(nu), "gamma_cov: nu must be positive");
  static const double sqrt_pi = 1.7724538509055160273;
  const double c = std::fabs(p.r - q.r) / std::sqrt(2.0);
  auto antideriv = [c](double u) {
    if (u <= 0.0) return 0.0;
    const double su = std::sqrt(u);
    double val = 2.0 * su * std::exp(-c * c / u);
    if (c > 0.0) val -= 2.0 * c * sqrt_pi * std::erfc(c / su);
    return val;
  };
  const double lo = std::fabs(p.t - q.t);
  const double hi = p.t + q.t;
  return nu / sqrt_pi * (antideriv(hi) - antideriv(lo));
}

// Gamma_0((t,r),(s,q)): initial-noise kernel, a four-part integral of products
// of Gaussian tail probabilities of a standard Brownian motion. Semi-infinite
// parts are truncated where the product of tails falls below 1e-16 of its
// peak; the truncation error is absorbed into the quadrature budget.
inline double gamma0_cov(const SpaceTimePoint& p, const SpaceTimePoint& q,
                         const QuadratureSpec& spec = QuadratureSpec{}) {
  p.validate();
  q.validate();
  const double t = p.t, r = p.r, s = q.t, qq = q.r;
  auto tail_gt = [](double tt, double a) {  // P(B_tt > a)
    if (tt == 0.0) return a < 0.0 ? 1.0 : 0.0;
    return 1.0 - norm_cdf(a / std::sqrt(tt));
  };
  auto tail_lt = [](double tt, double a) {  // P(B_tt < a)
    if (tt == 0.0) return a > 0.0 ? 1.0 : 0.0;
    return norm_cdf(a / std::sqrt(tt));
  };
  const double span = 9.5 * std::sqrt(std::max(t, s)) + std::fabs(r - qq);
  double total = 0.0;
  // upper tail product over [r v q, inf)
  {
    const double lo = std::max(r, qq);
    auto f = [&](double z) { return tail_gt(t, z - r) * tail_gt(s, z - qq); };
    total += integrate(f, lo, lo + span, spec).value;
  }
  // lower tail product over (-inf, r ^ q]
  {
    const double hi = std::min(r, qq);
    auto f = [&](double z) { return tail_lt(t, z - r) * tail_lt(s, z - qq); };
    total += integrate(f, hi - span, hi, spec).value;
  }
  if (r > qq) {
    auto f = [&](double z) { return tail_lt(t, z - r) * tail_gt(s, z - qq); };
    total -= integrate(f, qq, r, spec).value;
  } else if (r < qq) {
    auto f = [&](double z) { return tail_gt(t, z - r) * tail_lt(s, z - qq); };
    total -= integrate(f, r, qq, spec).value;
  }
  return total;
}

// Covariance of the limiting current-fluctuation field:
// f'(x0)^2 Gamma + Gamma_0.
inline double z_limit_cov(const SpaceTimePoint& p, const SpaceTimePoint& q, double nu,
                          double fprime_x0, const QuadratureSpec& spec = QuadratureSpec{}) {
  require_finite(fprime_x0, "fprime_x0");
  return fprime_x0 * fprime_x0 * gamma_cov(p, q, nu) + gamma0_cov(p, q, spec);
}

struct IdentityCheck {
  double lhs = 0.0;
  double rhs = 0.0;
  double gap = 0.0;
};

// Both sides of the occupation identity
//   int_0^t sqrt(t-s)/(pi s^{3/2}) |x| e^{-x^2/2s} ds
//     = int_0^t 1/sqrt(2 pi s) e^{-x^2/2s} ds
// by quadrature. The left side gets the substitution s = x^2/w^2 to tame the
// s -> 0 endpoint; the right side is integrable as-is.
inline IdentityCheck appendix_b_check(double x, double t,
                                      const QuadratureSpec& spec = QuadratureSpec{}) {
  require(t > 0.0 && std::isfinite(t), "appendix_b_check: t must be positive");
  require(x != 0.0 && std::isfinite(x), "appendix_b_check: x must be nonzero");
  static const double pi = 3.14159265358979323846;
  const double x2 = x * x;
  const double ax = std::fabs(x);
  // lhs: s = x^2 / w^2, ds = -2 x^2 / w^3 dw, s: 0..t <-> w: inf..|x|/sqrt(t)
  //   integrand ds -> sqrt(t - x^2/w^2) * (2 w / (pi x^2)) * x^2... collapses to
  //   (2/pi) sqrt(t - x^2/w^2) e^{-w^2/2} dw
  const double wlo = ax / std::sqrt(t);
  auto lhs_f = [&](double w) {
    const double ss = x2 / (w * w);
    return 2.0 / pi * std::sqrt(std::max(t - ss, 0.0)) * std::exp(-0.5 * w * w);
  };
  const double lhs = integrate(lhs_f, wlo, wlo + 9.5, spec).value;
  auto rhs_f = [&](double ss) {
    return std::exp(-x2 / (2.0 * ss)) / std::sqrt(2.0 * pi * ss);
  };
  const double rhs = integrate(rhs_f, 0.0, t, spec).value;
  return {lhs, rhs, std::fabs(lhs - rhs)};
}

}  // namespace hwflow
