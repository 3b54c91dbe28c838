#include <cmath>
#include <numbers>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "prufer_lab/spectrum.hpp"

using namespace prufer_lab;

namespace {

constexpr double kPiD = std::numbers::pi;

PotentialSpec free_spec() {
  PotentialSpec p = default_potential(0.3);
  p.fourier.clear();
  return p;
}

}  // namespace

TEST(Spectrum, FreeCountBelow) {
  // Free Dirichlet eigenvalues on (0, L) are (j pi / L)^2.
  const auto path = sample_path(free_spec(), 10.0, 0.01, {1, 0});
  EXPECT_EQ(count_below(path, free_spec(), 10.0, 1.0), 3);
  const double e5 = std::pow(5.0 * kPiD / 10.0, 2) * (1.0 + 1e-6);
  EXPECT_EQ(count_below(path, free_spec(), 10.0, e5), 5);
}

TEST(Spectrum, NonPositiveEnergyIsOutOfScope) {
  const auto path = sample_path(free_spec(), 10.0, 0.01, {1, 0});
  EXPECT_THROW(count_below(path, free_spec(), 10.0, 0.0), OutOfScopeError);
  EXPECT_THROW(count_below(path, free_spec(), 10.0, -2.0), OutOfScopeError);
}

TEST(Spectrum, FreePicketFence) {
  // With E0 = 1 and L = 100 the atoms are j pi - 100 for the integers j with j pi in (100, 100 + 8 pi].
  const double L = 100.0;
  const auto path = sample_path(free_spec(), L, 0.01, {1, 0});
  const auto res = solve_window(path, free_spec(), L, 1.0, {0.0, 8.0 * kPiD});
  ASSERT_EQ(res.atoms.size(), 8u);
  const double first = std::ceil(L / kPiD) * kPiD - L;
  for (std::size_t i = 0; i < res.atoms.size(); ++i) {
    EXPECT_NEAR(res.atoms[i], first + kPiD * static_cast<double>(i), 1e-8);
  }
}

TEST(Spectrum, ZeroWidthWindowIsEmpty) {
  const auto path = sample_path(default_potential(), 50.0, 0.01, {2, 0});
  const auto res = solve_window(path, default_potential(), 50.0, 1.0, {1.0, 1.0});
  EXPECT_TRUE(res.atoms.empty());
  EXPECT_EQ(res.level_lo, res.level_hi);
}

TEST(Spectrum, RejectsBadWindow) {
  const auto path = sample_path(default_potential(), 50.0, 0.01, {2, 0});
  EXPECT_THROW(solve_window(path, default_potential(), 50.0, 1.0, {2.0, 1.0}), ParameterError);
  EXPECT_THROW(solve_window(path, default_potential(), 50.0, 0.0, {0.0, 1.0}), ParameterError);
  EXPECT_THROW(solve_window(path, default_potential(), 50.0, 1.0, {-100.0, 1.0}), ParameterError);
}

TEST(Spectrum, AtomCountMatchesLevelDifference) {
  const auto spec = default_potential(0.3);
  const double L = 100.0;
  const auto path = sample_path(spec, L, 0.005, {3, 1});
  const auto res = solve_window(path, spec, L, 1.0, {0.0, 8.0 * kPiD});
  EXPECT_EQ(static_cast<long>(res.atoms.size()), res.level_hi - res.level_lo);
  for (std::size_t i = 1; i < res.atoms.size(); ++i) EXPECT_GT(res.atoms[i], res.atoms[i - 1]);
}

TEST(Spectrum, WindowCountMatchesFiniteDifferenceOracle) {
  const auto spec = default_potential(0.3);
  const double L = 50.0;
  const std::size_t cells = 200000;
  const auto path = sample_path(spec, L, L / static_cast<double>(cells), {5, 2});
  auto q = [&](double t) {
    const auto j = static_cast<std::size_t>(std::llround(t / path.dt));
    return std::pow(1.0 + t * t, -0.15) * path.f_values[j];
  };
  const Window w{0.0, 4.0 * kPiD};
  const auto res = solve_window(path, spec, L, 1.0, w);
  const double k_lo = 1.0 + w.lo / L;
  const double k_hi = 1.0 + w.hi / L;
  const long fd = oracle::fd_count(q, L, cells, k_hi * k_hi) - oracle::fd_count(q, L, cells, k_lo * k_lo);
  EXPECT_LE(std::abs(static_cast<long>(res.atoms.size()) - fd), 1);
}

TEST(Spectrum, FreeJumpFieldIsDeterministic) {
  const auto spec = free_spec();
  const double n = 100.0;
  const auto path = sample_path(spec, n, 0.01, {1, 0});
  const std::vector<double> lam{0.7 * kPiD, 2.3 * kPiD, 4.1 * kPiD};
  const std::vector<double> t{0.25, 0.5, 0.75, 1.0};
  const auto field = jump_field(path, spec, 1.0, n, lam, t);
  // The relative phase is lambda t exactly.
  for (std::size_t r = 0; r < lam.size(); ++r) {
    for (std::size_t i = 0; i < t.size(); ++i) {
      EXPECT_EQ(field.levels[r][i], static_cast<long>(std::floor(lam[r] * t[i] / kPiD)));
    }
  }
  EXPECT_EQ(field.rectangle_count(0, 3, 1, 1), 0);
  EXPECT_EQ(field.rectangle_count(0, 3, 0, 2), 3);
  // Jumps of lambda = 4.1 pi fall at t = k / 4.1.
  std::vector<double> times;
  for (const auto& e : field.events) {
    if (e.lambda_index == 2) times.push_back(e.t);
  }
  ASSERT_EQ(times.size(), 4u);
  for (std::size_t k = 0; k < 4; ++k) EXPECT_NEAR(times[k], static_cast<double>(k + 1) / 4.1, 1e-9);
}

TEST(Spectrum, JumpFieldRejectsBadGrids) {
  const auto path = sample_path(free_spec(), 10.0, 0.01, {1, 0});
  const std::vector<double> t{0.5, 1.0};
  const std::vector<double> bad{2.0, 1.0};
  EXPECT_THROW(jump_field(path, free_spec(), 1.0, 10.0, bad, t), ParameterError);
  const std::vector<double> lam{1.0};
  const std::vector<double> bad_t{0.5, 1.5};
  EXPECT_THROW(jump_field(path, free_spec(), 1.0, 10.0, lam, bad_t), ParameterError);
  EXPECT_THROW(jump_field(path, free_spec(), 1.0, 20.0, lam, t), DimensionError);
}

TEST(Spectrum, AtomsCsvRows) {
  SpectrumResult r;
  r.atoms = {0.5, 2.25};
  std::ostringstream out;
  write_atoms_csv(out, 7, r);
  EXPECT_EQ(out.str(), "7,0,0.5\n7,1,2.25\n");
}
