#include <cmath>
#include <complex>
#include <random>

#include <gtest/gtest.h>

#include "prufer_lab/torus.hpp"

using namespace prufer_lab;

namespace {

PotentialSpec zero_potential() {
  PotentialSpec p = default_potential(0.3);
  p.fourier.clear();
  return p;
}

PotentialSpec random_hermitian(std::mt19937_64& rng, int modes) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  PotentialSpec p = default_potential(0.3);
  p.fourier.clear();
  for (int k = 1; k <= modes; ++k) {
    const Complex c(u(rng), u(rng));
    p.fourier.push_back({{k}, c});
    p.fourier.push_back({{-k}, std::conj(c)});
  }
  return p;
}

}  // namespace

TEST(Torus, SingleStepPathHasTwoPositions) {
  const auto path = sample_path(default_potential(), 0.5, 0.5, {1, 2});
  EXPECT_EQ(path.steps, 1u);
  EXPECT_EQ(path.positions.size(), 2u);
  EXPECT_EQ(path.f_values.size(), 2u);
}

TEST(Torus, ZeroPotentialSamplesZero) {
  const auto path = sample_path(zero_potential(), 2.0, 0.01, {3, 0});
  for (double f : path.f_values) EXPECT_EQ(f, 0.0);
}

TEST(Torus, PathIsDeterministicPerKey) {
  const auto a = sample_path(default_potential(), 5.0, 0.01, {42, 7});
  const auto b = sample_path(default_potential(), 5.0, 0.01, {42, 7});
  const auto c = sample_path(default_potential(), 5.0, 0.01, {42, 8});
  EXPECT_EQ(a.positions, b.positions);
  EXPECT_EQ(a.f_values, b.f_values);
  EXPECT_NE(a.positions, c.positions);
}

TEST(Torus, IncrementVarianceFollowsGenerator) {
  // Generator (1/2) Laplacian: unwrapped increments have variance dt.
  const double dt = 0.01;
  const auto path = sample_path(default_potential(), 2000.0, dt, {5, 0});
  double s2 = 0.0;
  for (std::size_t j = 1; j <= path.steps; ++j) {
    const double d = std::remainder(path.positions[j] - path.positions[j - 1], 2.0 * std::numbers::pi);
    s2 += d * d;
  }
  EXPECT_NEAR(s2 / static_cast<double>(path.steps) / dt, 1.0, 0.02);
}

TEST(Torus, PositionsStayOnTorus) {
  const auto path = sample_path(default_potential(), 50.0, 0.01, {9, 1});
  for (double x : path.positions) {
    EXPECT_GE(x, 0.0);
    EXPECT_LT(x, 2.0 * std::numbers::pi);
  }
}

TEST(Torus, FValuesMatchEvaluation) {
  const auto path = sample_path(default_potential(), 1.0, 0.1, {9, 2});
  for (std::size_t j = 0; j <= path.steps; ++j) {
    EXPECT_NEAR(path.f_values[j], 2.0 * std::cos(path.position(j)[0]), 1e-14);
  }
}

TEST(Torus, DecayProfiles) {
  EXPECT_DOUBLE_EQ(eval_a(default_potential(0.3), 0.0), 1.0);
  const auto half = default_potential(0.5);
  const double t = 1e6;
  EXPECT_NEAR(eval_a(half, t) * std::sqrt(t), 1.0, 1e-9);
  PotentialSpec c = default_potential(0.3);
  c.profile = DecayProfile::kConstantCoupling;
  c.coupling = 0.1;
  EXPECT_DOUBLE_EQ(eval_a(c, 57.3), 0.1);
}

TEST(Torus, ResolventCoefficients) {
  const auto g = resolvent_coeffs(default_potential(), 1.0);
  ASSERT_EQ(g.size(), 2u);
  const Complex expected = 1.0 / Complex(-0.5, 2.0);
  EXPECT_NEAR(std::abs(g[0].c - expected), 0.0, 1e-15);
  EXPECT_NEAR(g[0].c.real(), -0.117647058823529, 1e-12);
  EXPECT_NEAR(g[0].c.imag(), -0.470588235294118, 1e-12);
  // Real coefficients and |k| shared: the two modes coincide.
  EXPECT_NEAR(std::abs(g[1].c - g[0].c), 0.0, 1e-15);
  EXPECT_TRUE(resolvent_coeffs(zero_potential(), 1.0).empty());
}

TEST(Torus, ResolventSingularAtZero) {
  EXPECT_THROW(resolvent_coeffs(default_potential(), 0.0), SingularResolventError);
}

TEST(Torus, SpectralConstantsDefault) {
  const auto k = compute_constants(default_potential(), 1.0);
  EXPECT_NEAR(k.c_e0, 2.0 / 4.25, 1e-14);
  EXPECT_NEAR(k.beta_e0, 17.0, 1e-12);
  EXPECT_NEAR(k.psi_mean, k.c_e0, 1e-14);
}

TEST(Torus, SpectralConstantsScaleQuadratically) {
  auto p = default_potential();
  const auto a = compute_constants(p, 1.0);
  for (auto& m : p.fourier) m.c *= 2.0;
  const auto b = compute_constants(p, 1.0);
  EXPECT_NEAR(b.c_e0, 4.0 * a.c_e0, 1e-13);
  EXPECT_NEAR(b.beta_e0, a.beta_e0 / 4.0, 1e-12);
}

TEST(Torus, PsiMeanEqualsCForRandomCoefficients) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 10; ++trial) {
    const auto p = random_hermitian(rng, 5);
    for (double e0 : {0.3, 1.0, 4.0}) {
      const auto k = compute_constants(p, e0);
      EXPECT_NEAR(k.psi_mean, k.c_e0, 1e-12 * k.c_e0);
    }
  }
}

TEST(Torus, ConstantsErrors) {
  EXPECT_THROW(compute_constants(zero_potential(), 1.0), DegeneratePotentialError);
  EXPECT_THROW(compute_constants(default_potential(), -1.0), ParameterError);
}

TEST(Torus, ValidationRejectsBadSpecs) {
  auto p = default_potential();
  p.fourier = {{{1}, Complex(1.0, 0.0)}};  // missing the conjugate partner
  EXPECT_THROW(validate(p), ParameterError);
  p = default_potential();
  p.fourier[0].k = {1, 0};
  EXPECT_THROW(validate(p), ParameterError);
  p = default_potential();
  p.fourier.push_back({{0}, Complex(0.5, 0.0)});
  EXPECT_THROW(validate(p), ParameterError);
  EXPECT_THROW(sample_path(default_potential(), 1.0, 0.0, {}), ParameterError);
  EXPECT_THROW(sample_path(default_potential(), 1.0, 2.0, {}), ParameterError);
}

TEST(Torus, TwoDimensionalPotential) {
  PotentialSpec p = default_potential(0.3);
  p.dim = 2;
  p.fourier = {{{1, 0}, Complex(1.0, 0.0)}, {{-1, 0}, Complex(1.0, 0.0)},
               {{0, 1}, Complex(0.0, 0.5)}, {{0, -1}, Complex(0.0, -0.5)}};
  const auto path = sample_path(p, 1.0, 0.1, {1, 1});
  for (std::size_t j = 0; j <= path.steps; ++j) {
    const auto x = path.position(j);
    EXPECT_NEAR(path.f_values[j], 2.0 * std::cos(x[0]) - std::sin(x[1]), 1e-14);
  }
  const auto k = compute_constants(p, 1.0);
  EXPECT_NEAR(k.psi_mean, k.c_e0, 1e-12 * k.c_e0);
}
