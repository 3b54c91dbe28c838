#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "prufer_lab/stats.hpp"

using namespace prufer_lab;

namespace {
constexpr double kPiD = std::numbers::pi;
}

TEST(Stats, KsSingleSample) {
  const std::vector<double> x{0.5};
  const auto r = ks_exponential(x, 1.0);
  // D = max(F(0.5), 1 - F(0.5)) = exp(-0.5).
  EXPECT_NEAR(r.statistic, std::exp(-0.5), 1e-12);
  EXPECT_EQ(r.n, 1u);
}

TEST(Stats, KsAcceptsExponentialSamples) {
  std::vector<double> x;
  for (int i = 0; i < 10000; ++i) x.push_back(-std::log1p(-(i + 0.5) / 10000.0) * kPiD);
  const auto r = ks_exponential(x, 1.0 / kPiD);
  EXPECT_TRUE(r.pass);
  EXPECT_LT(r.statistic, 1e-4 + 1e-12);
  // The clock process: all gaps equal pi.
  const std::vector<double> clock(500, kPiD);
  EXPECT_FALSE(ks_exponential(clock, 1.0 / kPiD).pass);
}

TEST(Stats, KolmogorovSurvival) {
  EXPECT_NEAR(kolmogorov_q(1.3581), 0.05, 1e-4);
  EXPECT_NEAR(kolmogorov_q(1.6276), 0.01, 1e-4);
  EXPECT_NEAR(kolmogorov_q(0.5), 0.9639, 1e-4);
}

TEST(Stats, Dispersion) {
  const std::vector<double> flat{3, 3, 3, 3};
  EXPECT_DOUBLE_EQ(poisson_dispersion(flat, 3.0).statistic, 0.0);
  const std::vector<double> ramp{0, 1, 2, 3};
  EXPECT_NEAR(poisson_dispersion(ramp, 1.5).statistic, (5.0 / 3.0) / 1.5, 1e-14);
  const std::vector<double> zeros(10, 0.0);
  EXPECT_TRUE(poisson_dispersion(zeros, 0.0).degenerate);
  EXPECT_FALSE(poisson_dispersion(zeros, 0.0).pass);
}

TEST(Stats, DispersionOfPoissonSample) {
  std::mt19937_64 rng(17);
  std::poisson_distribution<int> pois(4.0);
  std::vector<double> c;
  for (int i = 0; i < 2000; ++i) c.push_back(pois(rng));
  const auto r = poisson_dispersion(c, 4.0);
  EXPECT_GT(r.statistic, 0.9);
  EXPECT_LT(r.statistic, 1.1);
  EXPECT_TRUE(r.pass);
  ASSERT_TRUE(r.p_value.has_value());
  EXPECT_GT(*r.p_value, 0.001);
}

TEST(Stats, Uniformity) {
  std::vector<double> eq;
  const int m = 1000;
  for (int i = 0; i < m; ++i) eq.push_back(kPiD * (i + 0.5) / m);
  const auto r = uniformity_test(eq);
  EXPECT_LE(r.statistic, 1.0 / m);
  EXPECT_TRUE(r.pass);
  const std::vector<double> point(100, kPiD / 2);
  EXPECT_NEAR(uniformity_test(point).statistic, 0.5, 1e-12);
  EXPECT_FALSE(uniformity_test(point).pass);
  const std::vector<double> out{0.1, kPiD};
  EXPECT_THROW(uniformity_test(out), SampleError);
}

TEST(Stats, Pearson) {
  const std::vector<double> x{1, 2, 3, 5};
  const std::vector<double> neg{-1, -2, -3, -5};
  EXPECT_NEAR(pearson(x, x), 1.0, 1e-14);
  EXPECT_NEAR(pearson(x, neg), -1.0, 1e-14);
  const std::vector<double> flat{2, 2, 2, 2};
  EXPECT_TRUE(std::isnan(pearson(x, flat)));
  EXPECT_TRUE(independence_test(x, flat).degenerate);
  const std::vector<double> shorter{1, 2};
  EXPECT_THROW(pearson(x, shorter), DimensionError);
}

TEST(Stats, IndependenceOfIndependentSamples) {
  std::mt19937_64 rng(5);
  std::poisson_distribution<int> pois(2.0);
  std::vector<double> a;
  std::vector<double> b;
  for (int i = 0; i < 400; ++i) {
    a.push_back(pois(rng));
    b.push_back(pois(rng));
  }
  const auto r = independence_test(a, b, {1, 0}, 2000);
  EXPECT_LT(std::abs(r.statistic), 0.15);
  const auto same = independence_test(a, a, {1, 0}, 2000);
  EXPECT_FALSE(same.pass);
}

TEST(Stats, Nesting) {
  const std::vector<double> j{1.0, 2.0, 3.0};
  EXPECT_DOUBLE_EQ(nesting_measure(j, j, 0.01), 1.0);
  EXPECT_DOUBLE_EQ(nesting_measure({}, j, 0.01), 1.0);
  const std::vector<double> p{1.005, 2.5};
  EXPECT_NEAR(nesting_measure(j, p, 0.01), 1.0 / 3.0, 1e-15);
}

TEST(Stats, TimeAboveThreshold) {
  SdePath zero;
  zero.times = {0.0, 0.5, 1.0};
  zero.values = {0.0, 0.0, 0.0};
  const std::vector<SdePath> z{zero};
  EXPECT_DOUBLE_EQ(time_above_threshold(z, 0.5), 0.0);
  SdePath high = zero;
  high.values = {3.0, 3.0 + kPiD, 3.0};
  const std::vector<SdePath> h{high};
  EXPECT_DOUBLE_EQ(time_above_threshold(h, 0.5), 1.0);
  EXPECT_THROW(time_above_threshold(z, 0.0), ParameterError);
}

TEST(Stats, OrderViolation) {
  SdePath a;
  a.times = {0.0, 0.5, 1.0};
  a.values = {0.1, 0.2, 0.3};
  SdePath b = a;
  const std::vector<SdePath> lo{a};
  const std::vector<SdePath> same{b};
  EXPECT_DOUBLE_EQ(order_violation_measure(lo, same), 1.0);
  b.values = {0.5, 0.6, 0.7};
  const std::vector<SdePath> up{b};
  EXPECT_DOUBLE_EQ(order_violation_measure(lo, up), 0.0);
  b.times = {0.0, 0.4, 1.0};
  const std::vector<SdePath> skew{b};
  EXPECT_THROW(order_violation_measure(lo, skew), DimensionError);
}

TEST(Stats, IntensityOfPicketFence) {
  std::vector<std::vector<double>> r;
  for (int s = 0; s < 10; ++s) {
    std::vector<double> atoms;
    for (int j = 0; j < 8; ++j) atoms.push_back(0.5 + kPiD * j);
    r.push_back(atoms);
  }
  const std::vector<double> edges{0.0, 4.0 * kPiD, 8.0 * kPiD};
  const auto h = empirical_intensity(r, edges, [](double lo, double hi) { return (hi - lo) / kPiD; });
  for (std::size_t b = 0; b < 2; ++b) {
    EXPECT_NEAR(h.rate[b], 1.0 / kPiD, 1e-14);
    EXPECT_NEAR(h.target[b], 1.0 / kPiD, 1e-14);
    EXPECT_EQ(h.std_error[b], 0.0);
  }
  EXPECT_NEAR(h.max_abs_z(), 0.0, 1e-12);
  const std::vector<std::vector<double>> empty(3);
  const auto e = empirical_intensity(empty, edges);
  EXPECT_EQ(e.rate[0], 0.0);
  const std::vector<double> bad{1.0, 1.0};
  EXPECT_THROW(empirical_intensity(r, bad), ParameterError);
}

TEST(Stats, PooledGapsAreConsecutiveSpacings) {
  const std::vector<std::vector<double>> r{{1.0, 2.5, 4.0}, {0.3}, {}};
  const auto g = pooled_gaps(r);
  ASSERT_EQ(g.size(), 2u);
  EXPECT_DOUBLE_EQ(g[0], 1.5);
  EXPECT_DOUBLE_EQ(g[1], 1.5);
}

TEST(Stats, EmptySamplesThrow) {
  const std::vector<double> none;
  EXPECT_THROW(ks_exponential(none, 1.0), SampleError);
  EXPECT_THROW(poisson_dispersion(none, 1.0), SampleError);
  EXPECT_THROW(uniformity_test(none), SampleError);
  const std::vector<double> neg{-1.0};
  EXPECT_THROW(ks_exponential(neg, 1.0), SampleError);
}
