#include <cmath>
#include <numbers>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "prufer_lab/explosion.hpp"

using namespace prufer_lab;

namespace {

constexpr double kPiD = std::numbers::pi;

double oracle_mean(const DriftPotential& pot, double r) {
  auto b = [&](double x) {
    return oracle::stationary_plus_drift(x, pot.c_n, pot.lambda, pot.delta, pot.epsilon);
  };
  const double coarse = oracle::explosion_mean_trapezoid(b, pot.c_n, r, -40.0, 30.0, 2e-4);
  const double fine = oracle::explosion_mean_trapezoid(b, pot.c_n, r, -40.0, 30.0, 1e-4);
  return (4.0 * fine - coarse) / 3.0;
}

double bisect(const std::function<double(double)>& f, double lo, double hi) {
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if ((f(mid) > 0.0) == (f(lo) > 0.0)) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST(Explosion, DriftMatchesOracle) {
  const DriftPotential pot(20.0, kPiD, 0.01, 0.01);
  for (double r = -8.0; r <= 8.0; r += 0.013) {
    const double expect = oracle::stationary_plus_drift(r, 20.0, kPiD, 0.01, 0.01);
    EXPECT_NEAR(pot.drift(r), expect, 1e-12 * std::max(1.0, std::abs(expect)));
  }
}

TEST(Explosion, PotentialDerivativeIsMinusDrift) {
  for (int sign : {+1, -1}) {
    const DriftPotential pot(5.0, 2.0, 0.1, 0.05, sign);
    for (double r = -4.0; r <= 4.0; r += 0.0731) {
      const double h = 1e-6;
      const double dv = (pot.V(r + h) - pot.V(r - h)) / (2.0 * h);
      EXPECT_NEAR(dv, pot.W(r), 1e-5 * std::max(1.0, std::abs(pot.W(r)))) << "sign " << sign << " r " << r;
    }
  }
}

TEST(Explosion, QuadratureMatchesTrapezoidOracle) {
  const DriftPotential pot(20.0, kPiD, 0.01, 0.01);
  for (double r : {-5.0, -1.0}) {
    const double q = mean_explosion_quadrature(pot, r);
    EXPECT_NEAR(q / oracle_mean(pot, r), 1.0, 1e-6) << "r " << r;
  }
  EXPECT_NEAR(mean_explosion_quadrature(pot, -5.0), 0.933628136, 1e-6);
}

TEST(Explosion, LargeCouplingApproachesLimit) {
  const DriftPotential pot(50.0, kPiD, 0.0, 0.0);
  EXPECT_NEAR(mean_explosion_quadrature(pot, -8.0), 1.0, 0.05);
  // Above the barrier the time is close to the sech integral.
  EXPECT_NEAR(mean_explosion_quadrature(pot, 0.0), limit_mean(kPiD, 0.0), 0.05 * limit_mean(kPiD, 0.0));
}

TEST(Explosion, CriticalPoints) {
  const DriftPotential pot(20.0, kPiD, 0.01, 0.01);
  const auto cp = critical_points(pot);
  const auto asym = asymptotic_critical_points(pot);
  const double c2 = 400.0;
  EXPECT_NEAR(cp.a_n, asym.a_n, 2.0 / c2 * 10.0);
  EXPECT_LT(cp.a_n, cp.b_n);
  EXPECT_LT(cp.b_n, 0.0);
  EXPECT_NEAR(pot.drift(cp.a_n), 0.0, 1e-10 * c2);
  EXPECT_NEAR(pot.drift(cp.b_n), 0.0, 1e-10 * c2);
  auto f = [&](double r) { return oracle::stationary_plus_drift(r, 20.0, kPiD, 0.01, 0.01); };
  EXPECT_NEAR(cp.a_n, bisect(f, asym.a_n - 2.0, asym.a_n + 1.0), 1e-10);
  EXPECT_NEAR(cp.b_n, bisect(f, cp.a_n + 0.5, -0.01), 1e-10);
}

TEST(Explosion, CriticalPointsNeedStrongCoupling) {
  const DriftPotential weak(0.5, kPiD, 0.0, 0.0);
  EXPECT_THROW(critical_points(weak), AsymptoticRegimeError);
}

TEST(Explosion, LimitMeanIsSechIntegral) {
  auto sech_tail = [](double r) {
    // Simpson on [r, r + 60]
    const int n = 200000;
    const double h = 60.0 / n;
    double s = 1.0 / std::cosh(r) + 1.0 / std::cosh(r + 60.0);
    for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) / std::cosh(r + h * i);
    return s * h / 3.0;
  };
  for (double r : {-3.0, 0.0, 2.0}) {
    EXPECT_NEAR(limit_mean(1.0, r), sech_tail(r), 1e-8);
    EXPECT_NEAR(limit_mean(2.0, r), 0.5 * sech_tail(r), 1e-8);
  }
  EXPECT_NEAR(limit_mean(kPiD, -1e3), 1.0, 1e-14);
  EXPECT_THROW(limit_mean(0.0, 0.0), ParameterError);
}

TEST(Explosion, LaplaceLimit) {
  EXPECT_DOUBLE_EQ(laplace_limit(0.0), 1.0);
  EXPECT_DOUBLE_EQ(laplace_limit(1.0), 0.5);
  EXPECT_DOUBLE_EQ(laplace_limit(3.0), 0.25);
  EXPECT_THROW(laplace_limit(-1.0), ParameterError);
}

TEST(Explosion, RejectsBadInput) {
  EXPECT_THROW(DriftPotential(0.0, 1.0, 0.0, 0.0), ParameterError);
  EXPECT_THROW(DriftPotential(1.0, 1.0, -0.1, 0.0), ParameterError);
  EXPECT_THROW(DriftPotential(1.0, 1.0, 0.0, 0.0, 0), ParameterError);
  const DriftPotential zero(20.0, 0.0, 0.0, 0.0);
  EXPECT_THROW(mean_explosion_quadrature(zero, 0.0), ParameterError);
}

TEST(Explosion, SweepCsv) {
  const std::vector<double> c{20.0};
  const std::vector<double> lam{kPiD};
  const std::vector<double> r{0.0};
  const auto rows = explosion_sweep(c, lam, r, 0.0, 0.0);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_NEAR(rows[0].limit_value, 0.5, 1e-14);
  std::ostringstream out;
  write_sweep_csv(out, rows);
  EXPECT_EQ(out.str().substr(0, out.str().find('\n')), "C_n,lambda,r,mean_time,limit_value");
}
