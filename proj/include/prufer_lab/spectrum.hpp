#pragma once

// Dirichlet eigenvalues of H_L through Sturm oscillation: E = E_j(L) exactly
// when theta_L(sqrt(E)) = j pi. The rescaled point process
// xi_L = sum_j delta_{L (sqrt(E_j) - sqrt(E0))} and the two-parameter jump
// field (t, lambda) -> floor(Theta_{nt}(lambda) / pi) are built from it.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <ostream>
#include <span>
#include <sstream>
#include <utility>
#include <vector>

#include "prufer_lab/error.hpp"
#include "prufer_lab/prufer.hpp"
#include "prufer_lab/torus.hpp"

namespace prufer_lab {

struct Window {
  double lo = 0.0;
  double hi = 0.0;

  double width() const noexcept { return hi - lo; }
  bool contains(double x) const noexcept { return x > lo && x <= hi; }
};

// Number of Dirichlet eigenvalues of H_L below `energy` (the zero count of
// the solution with x_0 = 0 on (0, L]).
inline long count_below(const NoisePath& path, const PotentialSpec& spec, double L, double energy,
                        PhaseOptions options = {}) {
  if (!(energy > 0.0)) throw OutOfScopeError("count_below is defined for positive energies only");
  const double k[1] = {std::sqrt(energy)};
  const auto theta = terminal_phases(path, spec, std::span<const double>(k), L, 0.0, options);
  return oscillation_level(theta[0]);
}

struct SpectrumOptions {
  PhaseOptions phase;
  double points_per_level = 32.0;  // coarse kappa scan density per expected eigenvalue
  double tolerance_scale = 1e-10;  // tol_kappa = tolerance_scale * window width / L
  double monotonicity_slack = 1e-6;
};

struct SpectrumResult {
  double L = 0.0;
  double e0 = 0.0;
  Window window;
  std::vector<double> eigen_kappas;
  std::vector<double> atoms;  // L (kappa_j - sqrt(e0)), strictly increasing
  long level_lo = 0;          // floor(theta_L(kappa_min) / pi)
  long level_hi = 0;          // floor(theta_L(kappa_max) / pi)
  std::size_t phase_evaluations = 0;
};

// Rescaled eigenvalues inside `window` (in lambda units). The kappa interval
// is scanned, every integer-pi crossing of theta_L is bracketed, and each
// bracket is refined by bisection. All brackets advance together, one
// shared-path integration per bisection round.
inline SpectrumResult solve_window(const NoisePath& path, const PotentialSpec& spec, double L, double e0,
                                   Window window, SpectrumOptions options = {}) {
  if (!(e0 > 0.0)) throw ParameterError("e0 must be positive");
  if (!(L > 0.0)) throw ParameterError("L must be positive");
  if (!std::isfinite(window.lo) || !std::isfinite(window.hi) || window.hi < window.lo) {
    throw ParameterError("window must be a finite interval");
  }
  const double kappa0 = std::sqrt(e0);
  const double kappa_lo = kappa0 + window.lo / L;
  const double kappa_hi = kappa0 + window.hi / L;
  if (!(kappa_lo > 0.0)) throw ParameterError("sqrt(e0) + lambda_min / L must be positive");

  SpectrumResult result;
  result.L = L;
  result.e0 = e0;
  result.window = window;
  if (window.width() == 0.0) {
    const double k[1] = {kappa_lo};
    const auto th = terminal_phases(path, spec, std::span<const double>(k), L, 0.0, options.phase);
    result.level_lo = result.level_hi = oscillation_level(th[0]);
    result.phase_evaluations = 1;
    return result;
  }

  const std::size_t end = detail::steps_for_horizon(path, L);
  const auto a_nodes = decay_nodes(spec, path.dt, end, options.phase.substeps);
  const double expected_levels = window.width() / kPi;
  const auto scan_count =
      static_cast<std::size_t>(std::max(2.0, std::ceil(options.points_per_level * expected_levels) + 1.0));
  std::vector<double> scan(scan_count);
  for (std::size_t i = 0; i < scan_count; ++i) {
    const double u = static_cast<double>(i) / static_cast<double>(scan_count - 1);
    scan[i] = i + 1 == scan_count ? kappa_hi : kappa_lo + u * (kappa_hi - kappa_lo);
  }
  const auto scan_theta = terminal_phases(path, a_nodes, scan, L, 0.0, options.phase);
  result.phase_evaluations += scan_count;

  struct Bracket {
    long level;
    double lo;
    double hi;
  };
  std::vector<Bracket> brackets;
  for (std::size_t i = 0; i + 1 < scan_count; ++i) {
    const long l0 = oscillation_level(scan_theta[i]);
    const long l1 = oscillation_level(scan_theta[i + 1]);
    if (l1 < l0 && scan_theta[i] - scan_theta[i + 1] > options.monotonicity_slack) {
      std::ostringstream msg;
      msg << "theta_L decreased from " << scan_theta[i] << " to " << scan_theta[i + 1]
          << " between kappa " << scan[i] << " and " << scan[i + 1];
      throw BracketError(msg.str(), scan[i], scan[i + 1]);
    }
    for (long j = l0 + 1; j <= l1; ++j) brackets.push_back({j, scan[i], scan[i + 1]});
  }
  result.level_lo = oscillation_level(scan_theta.front());
  result.level_hi = oscillation_level(scan_theta.back());

  const double tol = options.tolerance_scale * window.width() / L;
  std::vector<double> mids;
  while (true) {
    mids.clear();
    for (const auto& b : brackets) {
      if (b.hi - b.lo > tol) mids.push_back(0.5 * (b.lo + b.hi));
    }
    if (mids.empty()) break;
    const auto th = terminal_phases(path, a_nodes, mids, L, 0.0, options.phase);
    result.phase_evaluations += mids.size();
    std::size_t m = 0;
    bool progressed = false;
    for (auto& b : brackets) {
      if (!(b.hi - b.lo > tol)) continue;
      const double mid = mids[m];
      if (oscillation_level(th[m]) >= b.level) {
        progressed |= mid < b.hi;
        b.hi = mid;
      } else {
        progressed |= mid > b.lo;
        b.lo = mid;
      }
      ++m;
    }
    if (!progressed) break;  // bracket at floating-point resolution
  }

  result.eigen_kappas.reserve(brackets.size());
  for (const auto& b : brackets) result.eigen_kappas.push_back(b.hi);
  std::sort(result.eigen_kappas.begin(), result.eigen_kappas.end());
  result.atoms.reserve(result.eigen_kappas.size());
  for (double k : result.eigen_kappas) {
    const double atom = std::clamp(L * (k - kappa0), window.lo, window.hi);
    if (!result.atoms.empty() && !(atom > result.atoms.back())) {
      throw BracketError("eigenvalue brackets collapsed onto one another", k, k);
    }
    result.atoms.push_back(atom);
  }
  return result;
}

inline void write_atoms_csv(std::ostream& out, std::uint64_t seed, const SpectrumResult& result) {
  for (std::size_t i = 0; i < result.atoms.size(); ++i) {
    out << seed << ',' << i << ',' << result.atoms[i] << '\n';
  }
}

struct JumpEvent {
  double t = 0.0;  // in [0, 1]
  std::size_t lambda_index = 0;
  long level = 0;
};

// Levels floor(Theta_{n t}(lambda) / pi) on a (lambda, t) grid from one
// shared path, plus the record-level jump times of every lambda row.
struct JumpField {
  std::vector<double> lambda_grid;
  std::vector<double> t_grid;
  std::vector<std::vector<long>> levels;  // levels[lambda][t]
  std::vector<JumpEvent> events;

  // N(t1, t2; lambda1, lambda2) from grid indices t1 <= t2, l1 <= l2.
  long rectangle_count(std::size_t t1, std::size_t t2, std::size_t l1, std::size_t l2) const {
    return (levels[l2][t2] - levels[l2][t1]) - (levels[l1][t2] - levels[l1][t1]);
  }
};

inline JumpField jump_field(const NoisePath& path, const PotentialSpec& spec, double e0, double n,
                            std::span<const double> lambda_grid, std::span<const double> t_grid,
                            PhaseOptions options = {}) {
  if (!(e0 > 0.0)) throw ParameterError("e0 must be positive");
  if (!(n > 0.0)) throw ParameterError("n must be positive");
  if (lambda_grid.empty() || t_grid.empty()) throw ParameterError("grids must be non-empty");
  for (std::size_t i = 1; i < lambda_grid.size(); ++i) {
    if (!(lambda_grid[i] > lambda_grid[i - 1])) throw ParameterError("lambda_grid must be increasing");
  }
  for (std::size_t i = 0; i < t_grid.size(); ++i) {
    if (t_grid[i] < 0.0 || t_grid[i] > 1.0 || (i > 0 && !(t_grid[i] > t_grid[i - 1]))) {
      throw ParameterError("t_grid must be increasing inside [0, 1]");
    }
  }
  const double kappa0 = std::sqrt(e0);
  std::vector<double> kappas{kappa0};
  for (double lam : lambda_grid) {
    const double k = kappa0 + lam / n;
    if (!(k > 0.0)) throw ParameterError("sqrt(e0) + lambda / n must be positive");
    kappas.push_back(k);
  }
  const std::size_t end = detail::steps_for_horizon(path, n * t_grid.back());
  std::vector<std::size_t> t_index(t_grid.size());
  for (std::size_t i = 0; i < t_grid.size(); ++i) t_index[i] = detail::steps_for_horizon(path, n * t_grid[i]);

  JumpField field;
  field.lambda_grid.assign(lambda_grid.begin(), lambda_grid.end());
  field.t_grid.assign(t_grid.begin(), t_grid.end());
  const std::size_t rows = lambda_grid.size();
  field.levels.assign(rows, std::vector<long>(t_grid.size(), 0));

  auto level_of = [](double v) { return static_cast<long>(std::floor(v / kPi)); };
  std::vector<long> record(rows, 0);
  std::vector<double> previous(rows, 0.0);
  std::size_t next_t = 0;
  while (next_t < t_index.size() && t_index[next_t] == 0) ++next_t;  // levels at t = 0 are zero

  integrate_phases(path, spec, kappas, 0.0, end, options, [&](std::size_t j, std::span<const double> th) {
    for (std::size_t r = 0; r < rows; ++r) {
      const double value = th[r + 1] - th[0];
      const long lev = level_of(value);
      if (lev > record[r]) {
        for (long k = record[r] + 1; k <= lev; ++k) {
          const double target = kPi * static_cast<double>(k);
          double frac = 1.0;
          if (value > previous[r] && target > previous[r]) {
            frac = std::clamp((target - previous[r]) / (value - previous[r]), 0.0, 1.0);
          }
          const double t = path.dt * (static_cast<double>(j - 1) + frac) / n;
          field.events.push_back({t, r, k});
        }
        record[r] = lev;
      }
      previous[r] = value;
    }
    while (next_t < t_index.size() && t_index[next_t] == j) {
      for (std::size_t r = 0; r < rows; ++r) field.levels[r][next_t] = level_of(th[r + 1] - th[0]);
      ++next_t;
    }
  });
  return field;
}

}  // namespace prufer_lab
