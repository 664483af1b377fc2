// Sampling the limiting Gaussian fields on finite point sets.
#pragma once

#include <cstdint>
#include <vector>

#include "hwflow/analytics.hpp"
#include "hwflow/rng.hpp"

namespace hwflow {

enum class FieldKernel { kGamma, kGamma0, kZLimit };

// Covariance matrix of the requested kernel on the given points (row-major).
inline std::vector<double> field_covariance(const std::vector<SpaceTimePoint>& points,
                                            FieldKernel kernel, double nu, double fprime_x0,
                                            const QuadratureSpec& spec = QuadratureSpec{}) {
  const std::size_t n = points.size();
  std::vector<double> cov(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      double v = 0.0;
      switch (kernel) {
        case FieldKernel::kGamma:
          v = gamma_cov(points[i], points[j], nu);
          break;
        case FieldKernel::kGamma0:
          v = gamma0_cov(points[i], points[j], spec);
          break;
        case FieldKernel::kZLimit:
          v = z_limit_cov(points[i], points[j], nu, fprime_x0, spec);
          break;
      }
      cov[i * n + j] = v;
      cov[j * n + i] = v;
    }
  }
  return cov;
}

namespace detail {

// Cholesky with escalating diagonal jitter, capped at 1e-10 * trace.
inline std::vector<double> cholesky_with_jitter(std::vector<double> a, std::size_t n) {
  double trace = 0.0;
  for (std::size_t i = 0; i < n; ++i) trace += a[i * n + i];
  double jitter = 0.0;
  for (int attempt = 0; attempt < 5; ++attempt) {
    std::vector<double> L(n * n, 0.0);
    bool ok = true;
    for (std::size_t i = 0; i < n && ok; ++i) {
      for (std::size_t j = 0; j <= i; ++j) {
        double s = a[i * n + j] + ((i == j) ? jitter : 0.0);
        for (std::size_t k = 0; k < j; ++k) s -= L[i * n + k] * L[j * n + k];
        if (i == j) {
          if (s <= 0.0) {
            ok = false;
            break;
          }
          L[i * n + i] = std::sqrt(s);
        } else {
          L[i * n + j] = s / L[j * n + j];
        }
      }
    }
    if (ok) return L;
    jitter = (jitter == 0.0) ? 1e-14 * trace : 10.0 * jitter;
    if (jitter > 1e-10 * trace)
      throw numeric_error("covariance matrix not PSD within jitter budget", 0.0, jitter);
  }
  throw numeric_error("covariance matrix not PSD within jitter budget", 0.0, jitter);
}

}  // namespace detail

// One mean-zero Gaussian vector with the requested kernel covariance.
inline std::vector<double> sample_gaussian_field(const std::vector<SpaceTimePoint>& points,
                                                 FieldKernel kernel, double nu, double fprime_x0,
                                                 RngStream& rng,
                                                 const QuadratureSpec& spec = QuadratureSpec{}) {
  require(!points.empty(), "sample_gaussian_field: empty point set");
  const std::size_t n = points.size();
  const auto L = detail::cholesky_with_jitter(field_covariance(points, kernel, nu, fprime_x0, spec), n);
  std::vector<double> z(n), out(n, 0.0);
  for (auto& v : z) v = rng.normal();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j <= i; ++j) out[i] += L[i * n + j] * z[j];
  return out;
}

// Ensemble of draws, one row per replicate (factorization done once).
inline std::vector<std::vector<double>> sample_gaussian_field_ensemble(
    const std::vector<SpaceTimePoint>& points, FieldKernel kernel, double nu, double fprime_x0,
    std::uint64_t master_seed, int replicates, const QuadratureSpec& spec = QuadratureSpec{}) {
  require(!points.empty(), "sample_gaussian_field_ensemble: empty point set");
  const std::size_t n = points.size();
  const auto L = detail::cholesky_with_jitter(field_covariance(points, kernel, nu, fprime_x0, spec), n);
  std::vector<std::vector<double>> out(static_cast<std::size_t>(replicates));
  for (int rep = 0; rep < replicates; ++rep) {
    RngStream rng = RngStream::substream(master_seed, static_cast<std::uint64_t>(rep));
    std::vector<double> z(n), row(n, 0.0);
    for (auto& v : z) v = rng.normal();
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j <= i; ++j) row[i] += L[i * n + j] * z[j];
    out[static_cast<std::size_t>(rep)] = std::move(row);
  }
  return out;
}

}  // namespace hwflow
