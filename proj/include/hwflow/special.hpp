// Gaussian distribution helpers and the scaled complementary error function.
#pragma once

#include <cmath>

#include "hwflow/common.hpp"

namespace hwflow {

inline double norm_pdf(double x) {
  static const double inv_sqrt_2pi = 0.3989422804014326779;
  return inv_sqrt_2pi * std::exp(-0.5 * x * x);
}

// Standard normal CDF. Absolute error well below 1e-12 on all finite inputs.
inline double norm_cdf(double x) {
  static const double inv_sqrt2 = 0.7071067811865475244;
  return 0.5 * std::erfc(-x * inv_sqrt2);
}

// erfcx(x) = exp(x^2) * erfc(x) for x >= 0.
//
// The direct product is fine up to moderate x but erfc underflows (and exp
// overflows) near x ~ 26.6, exactly the regime needed by the sticky-kernel
// formulas, which contain e^{t/2nu^2}[1 - Phi(sqrt(t)/nu)]. For large x we
// switch to the Laplace continued fraction, which converges quickly there.
inline double erfcx(double x) {
  require(x >= 0.0, "erfcx: negative argument not supported");
  if (x < 12.0) return std::exp(x * x) * std::erfc(x);
  // Continued fraction erfcx(x) = (1/sqrt(pi)) / (x + (1/2)/(x + 1/(x + (3/2)/(x + 2/(x + ...)))))
  // evaluated bottom-up with a fixed depth; at x >= 12 thirty levels give
  // full double precision.
  static const double inv_sqrt_pi = 0.5641895835477562869;
  double f = 0.0;
  for (int k = 30; k >= 1; --k) f = (0.5 * k) / (x + f);
  return inv_sqrt_pi / (x + f);
}

// 2 e^{z^2/2} (1 - Phi(z)) for z >= 0, the factor appearing in the local-time
// mean and in the H kernel; equals erfcx(z / sqrt(2)).
inline double scaled_gauss_tail(double z) {
  static const double inv_sqrt2 = 0.7071067811865475244;
  return erfcx(z * inv_sqrt2);
}

}  // namespace hwflow
