#include <cmath>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "prufer_lab/prufer.hpp"

using namespace prufer_lab;

namespace {

PotentialSpec free_spec() {
  PotentialSpec p = default_potential(0.3);
  p.fourier.clear();
  return p;
}

// Constant coupling; paired with a hand-made path on which F = 2 throughout.
PotentialSpec constant_spec(double q) {
  PotentialSpec p = default_potential(0.3);
  p.profile = DecayProfile::kConstantCoupling;
  p.coupling = q;
  return p;
}

}  // namespace

TEST(Prufer, FreePhaseIsLinear) {
  const auto path = sample_path(free_spec(), 20.0, 0.01, {1, 0});
  const double kappa = 1.3;
  const auto traj = integrate_phase(path, free_spec(), kappa, 0.0);
  for (std::size_t j = 0; j < traj.thetas.size(); j += 97) {
    EXPECT_NEAR(traj.thetas[j], kappa * 0.01 * static_cast<double>(j), 1e-11);
  }
  EXPECT_NEAR(traj.tilde(traj.thetas.size() - 1), 0.0, 1e-11);
}

TEST(Prufer, StationarySlopeWhenPotentialEqualsKappaSquared) {
  // theta' = kappa - (q / kappa) sin^2 theta vanishes at theta = pi/2 when q = kappa^2.
  const double kappa = 0.8;
  auto spec = constant_spec(kappa * kappa / 2.0);
  NoisePath path;
  path.dt = 1e-4;
  path.steps = 1;
  path.dim = 1;
  path.positions = {0.0, 0.0};
  path.f_values = {2.0, 2.0};
  const auto traj = integrate_phase(path, spec, kappa, std::numbers::pi / 2.0);
  EXPECT_NEAR((traj.thetas[1] - traj.thetas[0]) / path.dt, 0.0, 1e-6);
}

TEST(Prufer, MatchesRk4OnSmoothPotential) {
  const auto spec = default_potential(0.3);
  const auto path = sample_path(spec, 10.0, 1e-3, {2, 0});
  const double kappa = 1.0;
  const auto traj = integrate_phase(path, spec, kappa, 0.3);
  // Independent RK4 on the same piecewise-constant-in-F, smooth-in-a right-hand side.
  double th = 0.3;
  const double h = path.dt;
  for (std::size_t j = 0; j < path.steps; ++j) {
    const double f = path.f_values[j];
    auto rhs = [&](double t, double x) {
      const double q = std::pow(1.0 + t * t, -0.15) * f;
      return kappa - q / kappa * std::sin(x) * std::sin(x);
    };
    const double t = h * static_cast<double>(j);
    const double k1 = rhs(t, th);
    const double k2 = rhs(t + h / 2, th + h / 2 * k1);
    const double k3 = rhs(t + h / 2, th + h / 2 * k2);
    const double k4 = rhs(t + h, th + h * k3);
    th += h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
  }
  EXPECT_NEAR(traj.thetas.back(), th, 1e-4);
}

TEST(Prufer, CountMatchesFiniteDifferenceOracle) {
  const auto spec = default_potential(0.3);
  const double L = 50.0;
  const std::size_t cells = 200000;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const auto path = sample_path(spec, L, L / static_cast<double>(cells), {77, seed});
    const double kappa = 1.0;
    const double k[1] = {kappa};
    const auto th = terminal_phases(path, spec, std::span<const double>(k), L, 0.0);
    const long count = oscillation_level(th[0]);
    auto q = [&](double t) {
      const auto j = static_cast<std::size_t>(std::llround(t / path.dt));
      return std::pow(1.0 + t * t, -0.15) * path.f_values[j];
    };
    const long fd = oracle::fd_count(q, L, cells, kappa * kappa);
    EXPECT_LE(std::abs(count - fd), 1) << "seed " << seed;
  }
}

TEST(Prufer, RejectsBadInput) {
  const auto path = sample_path(default_potential(), 1.0, 0.01, {1, 1});
  EXPECT_THROW(integrate_phase(path, default_potential(), 0.0), ParameterError);
  EXPECT_THROW(integrate_phase(path, default_potential(), -1.0), ParameterError);
  const double k[1] = {1.0};
  EXPECT_THROW(terminal_phases(path, default_potential(), std::span<const double>(k), 5.0, 0.0), DimensionError);
  const auto coarse = sample_path(default_potential(), 10.0, 1.0, {1, 1});
  EXPECT_THROW(integrate_phase(coarse, default_potential(), 1.0), ParameterError);
}

TEST(Prufer, RelativePhaseFreeEqualsLambda) {
  const auto spec = free_spec();
  const double L = 40.0;
  const auto path = sample_path(spec, L, 0.01, {3, 0});
  const double lam[3] = {0.0, std::numbers::pi, 2.5 * std::numbers::pi};
  const auto rel = relative_phases(path, spec, 1.0, std::span<const double>(lam), L);
  ASSERT_EQ(rel.size(), 3u);
  for (double v : rel[0].big_theta) EXPECT_EQ(v, 0.0);
  EXPECT_NEAR(rel[1].big_theta.back(), std::numbers::pi, 1e-10);
  EXPECT_NEAR(rel[2].big_theta.back(), 2.5 * std::numbers::pi, 1e-10);
  EXPECT_GE(rel[0].phi, 0.0);
  EXPECT_LT(rel[0].phi, std::numbers::pi);
  EXPECT_NEAR(rel[0].phi, fractional(L), 1e-9);
}

TEST(Prufer, FractionalPart) {
  const double pi = std::numbers::pi;
  EXPECT_NEAR(fractional(1.5 * pi), pi / 2, 1e-15);
  EXPECT_NEAR(fractional(-0.1), pi - 0.1, 1e-15);
  for (int k = -5; k <= 5; ++k) EXPECT_EQ(fractional(k * pi), 0.0);
}

TEST(Prufer, JumpTimesOfLinearPhase) {
  const double pi = std::numbers::pi;
  EXPECT_TRUE(jump_times(std::vector<double>(100, 0.0), 0.1, 0.0).jumps.empty());
  // Theta_t = lambda t / L, lambda = 2.5 pi, L = 10.
  const double L = 10.0;
  const double lambda = 2.5 * pi;
  const double dt = 1e-3;
  std::vector<double> v;
  for (std::size_t j = 0; j <= 10000; ++j) v.push_back(lambda * dt * static_cast<double>(j) / L);
  const auto ex = jump_times(v, dt, 0.0);
  ASSERT_EQ(ex.jumps.size(), 2u);
  EXPECT_EQ(ex.jumps[0].level, 1);
  EXPECT_EQ(ex.jumps[1].level, 2);
  EXPECT_NEAR(ex.jumps[0].time, L * pi / lambda, 1e-9);
  EXPECT_NEAR(ex.jumps[1].time, 2 * L * pi / lambda, 1e-9);
}

TEST(Prufer, JumpTimesRecordOnlyAndViolations) {
  const double pi = std::numbers::pi;
  // Up through pi, back below, up again: one record jump, one late violation.
  const std::vector<double> v{0.0, 0.9 * pi, 1.1 * pi, 0.9 * pi, 1.2 * pi, 2.1 * pi};
  const auto ex = jump_times(v, 1.0, 0.0);
  ASSERT_EQ(ex.jumps.size(), 2u);
  EXPECT_EQ(ex.jumps[0].level, 1);
  EXPECT_EQ(ex.jumps[1].level, 2);
  EXPECT_EQ(ex.late_violations, 1u);
  const auto early = jump_times(v, 1.0, 3.5);
  EXPECT_EQ(early.early_violations, 1u);
  ASSERT_EQ(early.jumps.size(), 1u);
  EXPECT_EQ(early.jumps[0].level, 2);
}

TEST(Prufer, SubstepsAgree) {
  const auto spec = default_potential(0.3);
  const auto path = sample_path(spec, 30.0, 0.01, {4, 0});
  const auto a = integrate_phase(path, spec, 1.0, 0.0, PhaseOptions{1});
  const auto b = integrate_phase(path, spec, 1.0, 0.0, PhaseOptions{4});
  EXPECT_NEAR(a.thetas.back(), b.thetas.back(), 1e-4);
}
