// Order-stable summation, moment estimates, KS test, log-log scaling fits.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "hwflow/common.hpp"

namespace hwflow {

// Neumaier compensated summation. Used everywhere ensemble statistics are
// reduced so that results do not depend on how replicates were scheduled.
class NeumaierSum {
 public:
  void add(double x) {
    double t = sum_ + x;
    if (std::fabs(sum_) >= std::fabs(x))
      comp_ += (sum_ - t) + x;
    else
      comp_ += (x - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

inline double stable_sum(std::span<const double> xs) {
  NeumaierSum s;
  for (double x : xs) s.add(x);
  return s.value();
}

inline double mean(std::span<const double> xs) {
  require(!xs.empty(), "mean of empty sample");
  return stable_sum(xs) / static_cast<double>(xs.size());
}

// Unbiased sample variance (two-pass).
inline double variance(std::span<const double> xs) {
  require(xs.size() >= 2, "variance needs at least two points");
  const double m = mean(xs);
  NeumaierSum s;
  for (double x : xs) s.add((x - m) * (x - m));
  return s.value() / static_cast<double>(xs.size() - 1);
}

inline double covariance(std::span<const double> xs, std::span<const double> ys) {
  require(xs.size() == ys.size() && xs.size() >= 2, "covariance: bad sample sizes");
  const double mx = mean(xs), my = mean(ys);
  NeumaierSum s;
  for (std::size_t i = 0; i < xs.size(); ++i) s.add((xs[i] - mx) * (ys[i] - my));
  return s.value() / static_cast<double>(xs.size() - 1);
}

inline double std_error_of_mean(std::span<const double> xs) {
  return std::sqrt(variance(xs) / static_cast<double>(xs.size()));
}

// Standard error of the sample covariance of (x, y), estimated from the
// replicate-level products (delta method on the same sample).
inline double std_error_of_cov(std::span<const double> xs, std::span<const double> ys) {
  const double mx = mean(xs), my = mean(ys);
  std::vector<double> prod(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) prod[i] = (xs[i] - mx) * (ys[i] - my);
  return std_error_of_mean(prod);
}

// Standard error of the unbiased sample variance, from the same sample's
// fourth central moment.
inline double std_error_of_variance(std::span<const double> xs) {
  require(xs.size() >= 4, "std_error_of_variance: sample too small");
  const double m = mean(xs);
  const double n = static_cast<double>(xs.size());
  NeumaierSum s2, s4;
  for (double x : xs) {
    const double d2 = (x - m) * (x - m);
    s2.add(d2);
    s4.add(d2 * d2);
  }
  const double v = s2.value() / (n - 1.0);
  const double m4 = s4.value() / n;
  const double var_of_var = (m4 - v * v * (n - 3.0) / (n - 1.0)) / n;
  return std::sqrt(std::max(var_of_var, 0.0));
}

struct KsResult {
  double statistic = 0.0;
  double critical_1pct = 0.0;
  double critical_5pct = 0.0;
  std::size_t n = 0;
};

// One-sample Kolmogorov-Smirnov statistic sup |F_hat - F| against a given CDF,
// with asymptotic critical values c(alpha)/sqrt(N), c(0.01)=1.628, c(0.05)=1.358.
inline KsResult ks_statistic(std::vector<double> sample, const std::function<double(double)>& cdf) {
  require(sample.size() >= 20, "ks_statistic: sample too small");
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double F = cdf(sample[i]);
    d = std::max(d, (static_cast<double>(i) + 1.0) / n - F);
    d = std::max(d, F - static_cast<double>(i) / n);
  }
  return {d, 1.628 / std::sqrt(n), 1.358 / std::sqrt(n), sample.size()};
}

struct ScalingFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
  double r_squared = 0.0;
};

// Least-squares slope of log(variance) against log(scale).
inline ScalingFit fit_scaling(std::span<const double> scales, std::span<const double> variances) {
  require(scales.size() == variances.size(), "fit_scaling: size mismatch");
  require(scales.size() >= 3, "fit_scaling: need at least three scales");
  const std::size_t m = scales.size();
  std::vector<double> x(m), y(m);
  for (std::size_t i = 0; i < m; ++i) {
    require(scales[i] > 0.0 && variances[i] > 0.0, "fit_scaling: inputs must be positive");
    x[i] = std::log(scales[i]);
    y[i] = std::log(variances[i]);
  }
  const double xbar = mean(x), ybar = mean(y);
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    sxx += (x[i] - xbar) * (x[i] - xbar);
    sxy += (x[i] - xbar) * (y[i] - ybar);
    syy += (y[i] - ybar) * (y[i] - ybar);
  }
  require(sxx > 0.0, "fit_scaling: degenerate scales");
  ScalingFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = ybar - fit.slope * xbar;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double r = y[i] - (fit.intercept + fit.slope * x[i]);
    ss_res += r * r;
  }
  fit.r_squared = (syy > 0.0) ? 1.0 - ss_res / syy : 1.0;
  fit.slope_stderr = (m > 2) ? std::sqrt(ss_res / (static_cast<double>(m) - 2.0) / sxx) : 0.0;
  return fit;
}

}  // namespace hwflow
