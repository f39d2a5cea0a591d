#include "kpzlab/stats.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

using namespace kpzlab;

namespace {

std::vector<double> normal_draws(std::size_t n, std::uint64_t seed, double mean = 0.0, double sd = 1.0) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> d(mean, sd);
  std::vector<double> v(n);
  for (double& x : v) x = d(gen);
  return v;
}

}  // namespace

TEST(MomentReport, ConstantSamples) {
  const std::vector<double> v(12, 0.75);
  const MomentReport m = moment_report(v);
  EXPECT_EQ(m.mean.value, 0.75);
  EXPECT_EQ(m.variance.value, 0.0);
  EXPECT_EQ(m.n, 12u);
}

TEST(MomentReport, HandArithmetic) {
  // {0, 2} itself is below the 8-sample minimum; four copies give mean 1 and
  // unbiased variance 8 / 7. The pair alone goes through covariance.
  const std::vector<double> v{0, 2, 0, 2, 0, 2, 0, 2};
  const MomentReport m = moment_report(v);
  EXPECT_DOUBLE_EQ(m.mean.value, 1.0);
  EXPECT_DOUBLE_EQ(m.variance.value, 8.0 / 7.0);
  EXPECT_NEAR(m.skewness.value, 0.0, 1e-15);
  EXPECT_NEAR(m.excess_kurtosis.value, -2.0, 1e-14);
  const std::vector<double> three{0, 2, 1};
  EXPECT_DOUBLE_EQ(covariance(three, three).value, 1.0);
  EXPECT_GT(m.mean.se, 0.0);
  EXPECT_GT(m.variance.se, 0.0);
}

TEST(MomentReport, TooFewSamples) {
  const std::vector<double> v{0.0, 2.0};
  try {
    moment_report(v);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::domain);
  }
}

TEST(MomentReport, StandardNormalShape) {
  const auto v = normal_draws(10000, 42);
  const MomentReport m = moment_report(v);
  EXPECT_LE(std::abs(m.skewness.value), 4.0 * m.skewness.se);
  EXPECT_LE(std::abs(m.excess_kurtosis.value), 4.0 * m.excess_kurtosis.se);
  EXPECT_LE(std::abs(m.mean.value), 4.0 * m.mean.se);
  EXPECT_LE(std::abs(m.variance.value - 1.0), 4.0 * m.variance.se);
  // Jackknife SE of the mean is the textbook s / sqrt(n).
  EXPECT_NEAR(m.mean.se, std::sqrt(m.variance.value / 10000.0), 1e-12);
}

TEST(MomentReport, PermutationInvariant) {
  auto v = normal_draws(500, 3, 0.2, 0.7);
  const MomentReport a = moment_report(v, 0.2, 0.49);
  std::reverse(v.begin(), v.end());
  std::shuffle(v.begin(), v.end(), std::mt19937_64(9));
  const MomentReport b = moment_report(v, 0.2, 0.49);
  EXPECT_EQ(a.mean.value, b.mean.value);
  EXPECT_EQ(a.variance.value, b.variance.value);
  EXPECT_EQ(a.variance.se, b.variance.se);
  EXPECT_EQ(a.excess_kurtosis.value, b.excess_kurtosis.value);
  EXPECT_EQ(a.ks_distance, b.ks_distance);
}

TEST(KsDistance, SingleSampleAndPointMass) {
  const std::vector<double> one{0.3};
  EXPECT_DOUBLE_EQ(ks_distance(one, 0.3, 2.0), 0.5);
  const std::vector<double> same(5, 1.25);
  EXPECT_EQ(ks_distance(same, 1.25, 0.0), 0.0);
  const std::vector<double> spread{1.0, 1.5};
  EXPECT_DOUBLE_EQ(ks_distance(spread, 1.25, 0.0), 0.25);
  EXPECT_THROW(ks_distance(one, 0.0, -1.0), Error);
}

TEST(KsDistance, NullDistribution) {
  int below = 0;
  for (std::uint64_t trial = 0; trial < 100; ++trial) {
    const auto v = normal_draws(10000, 1000 + trial, 0.5, 2.0);
    const double d = ks_distance(v, 0.5, 4.0);
    EXPECT_GE(d, 0.0);
    EXPECT_LE(d, 1.0);
    below += d < ks_threshold_1pct(v.size());
  }
  EXPECT_GE(below, 99);
}

TEST(KsDistance, ShiftInvariant) {
  auto v = normal_draws(300, 8);
  const double d0 = ks_distance(v, 0.1, 1.2);
  for (double& x : v) x += 0.5;  // exact in binary
  EXPECT_NEAR(ks_distance(v, 0.6, 1.2), d0, 1e-12);
}

TEST(WickCheck, GaussianDraws) {
  const double s2 = 0.09;
  const auto v = normal_draws(20000, 77, -0.1, std::sqrt(s2));
  const WickCheck w = wick_check(v, s2);
  EXPECT_EQ(w.target3, 0.0);
  EXPECT_NEAR(w.target4, 3.0 * s2 * s2, 1e-16);
  EXPECT_LE(std::abs(w.z3), 4.0);
  EXPECT_LE(std::abs(w.z4), 4.0);
  EXPECT_TRUE(w.within(4.0));
}

TEST(WickCheck, ConstantSamples) {
  const std::vector<double> v(150, -2.0);
  const WickCheck w = wick_check(v, 0.0);
  EXPECT_EQ(w.m3.value, 0.0);
  EXPECT_EQ(w.m4.value, 0.0);
  EXPECT_EQ(w.z3, 0.0);
  EXPECT_EQ(w.z4, 0.0);
  EXPECT_THROW(wick_check(std::vector<double>(99, 0.0), 0.0), Error);
}

TEST(Covariance, AgainstKnownCorrelation) {
  const auto a = normal_draws(5000, 1), b = normal_draws(5000, 2);
  std::vector<double> y(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) y[i] = 0.6 * a[i] + 0.8 * b[i];
  const Jackknifed c = covariance(a, y);
  EXPECT_LE(std::abs(c.value - 0.6), 4.0 * c.se);
}

TEST(TrendTest, Examples) {
  const std::vector<double> down{3, 2, 1}, up{1, 2}, flat{1, 1, 1}, late{5, 4, 4.5};
  EXPECT_TRUE(trend_test(down).monotone);
  EXPECT_EQ(trend_test(down).describe(), "monotone_nonincreasing");
  EXPECT_FALSE(trend_test(up).monotone);
  EXPECT_EQ(trend_test(up).violated_at, 1u);
  EXPECT_EQ(trend_test(up).describe(), "violated(1)");
  EXPECT_TRUE(trend_test(flat).monotone);
  EXPECT_FALSE(trend_test(flat, 0.0, true).monotone);
  EXPECT_EQ(trend_test(late).violated_at, 2u);
  EXPECT_TRUE(trend_test(late, 0.5).monotone);
  EXPECT_THROW(trend_test(std::vector<double>{1.0}), Error);
}
