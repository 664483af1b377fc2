#include <cmath>
#include <gtest/gtest.h>

#include "hwflow/gaussian_field.hpp"
#include "hwflow/stats.hpp"

namespace {

using namespace hwflow;

TEST(GaussianField, SinglePointVariance) {
  const std::vector<SpaceTimePoint> pts{{1.0, 0.0}};
  const auto draws = sample_gaussian_field_ensemble(pts, FieldKernel::kGamma, 1.0, 0.0, 61, 100000);
  std::vector<double> v(draws.size());
  for (std::size_t i = 0; i < draws.size(); ++i) v[i] = draws[i][0];
  const double target = 1.595769121605730712;  // Gamma((1,0),(1,0)) at nu = 1
  EXPECT_NEAR(variance(v), target, 3.0 * target * std::sqrt(2.0 / 100000.0));
  EXPECT_NEAR(mean(v), 0.0, 3.0 * std_error_of_mean(v));
}

TEST(GaussianField, CovarianceMatchesKernelOnFourPoints) {
  const std::vector<SpaceTimePoint> pts{{1.0, 0.0}, {1.0, 0.5}, {0.5, -0.3}, {2.0, 1.0}};
  for (FieldKernel kernel : {FieldKernel::kGamma, FieldKernel::kGamma0, FieldKernel::kZLimit}) {
    const auto draws = sample_gaussian_field_ensemble(pts, kernel, 1.0, 0.7, 62, 50000);
    const auto target = field_covariance(pts, kernel, 1.0, 0.7);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      for (std::size_t j = i; j < pts.size(); ++j) {
        std::vector<double> a(draws.size()), b(draws.size());
        for (std::size_t r = 0; r < draws.size(); ++r) {
          a[r] = draws[r][i];
          b[r] = draws[r][j];
        }
        EXPECT_NEAR(covariance(a, b), target[i * pts.size() + j],
                    3.0 * std_error_of_cov(a, b))
            << "kernel " << static_cast<int>(kernel) << " entry " << i << "," << j;
      }
    }
  }
}

TEST(GaussianField, ZLimitWithZeroSlopeMatchesGamma0) {
  const std::vector<SpaceTimePoint> pts{{1.0, 0.0}, {1.5, 0.4}};
  const auto a = sample_gaussian_field_ensemble(pts, FieldKernel::kZLimit, 1.0, 0.0, 63, 20000);
  const auto b = sample_gaussian_field_ensemble(pts, FieldKernel::kGamma0, 1.0, 0.0, 63, 20000);
  // identical kernels and identical seeds: identical draws
  for (std::size_t r = 0; r < a.size(); ++r)
    for (std::size_t i = 0; i < pts.size(); ++i) EXPECT_NEAR(a[r][i], b[r][i], 1e-9);
  // marginal KS as a law-level check
  std::vector<double> am(a.size()), bm(b.size());
  for (std::size_t r = 0; r < a.size(); ++r) {
    am[r] = a[r][0];
    bm[r] = b[r][0];
  }
  const double sd = std::sqrt(gamma0_cov(pts[0], pts[0]));
  const KsResult ks = ks_statistic(am, [sd](double v) { return norm_cdf(v / sd); });
  EXPECT_LT(ks.statistic, ks.critical_1pct);
}

TEST(GaussianField, DeterministicPerSeed) {
  const std::vector<SpaceTimePoint> pts{{1.0, 0.0}, {1.0, 1.0}};
  RngStream r1(99), r2(99);
  const auto d1 = sample_gaussian_field(pts, FieldKernel::kGamma, 1.0, 0.0, r1);
  const auto d2 = sample_gaussian_field(pts, FieldKernel::kGamma, 1.0, 0.0, r2);
  EXPECT_EQ(d1, d2);
}

TEST(GaussianField, RejectsNonPsdInput) {
  // duplicate points give a singular (but PSD) matrix: jitter must rescue it
  const std::vector<SpaceTimePoint> pts{{1.0, 0.0}, {1.0, 0.0}};
  RngStream rng(17);
  EXPECT_NO_THROW(sample_gaussian_field(pts, FieldKernel::kGamma, 1.0, 0.0, rng));
}

}  // namespace
