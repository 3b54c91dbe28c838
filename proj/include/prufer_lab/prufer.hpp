#pragma once

// Prufer phase of H x = kappa^2 x along a fixed noise path:
//
//   d theta / dt = kappa - (a(t) F(X_t) / kappa) sin^2 theta,   theta_0 = theta0.
//
// The noise is piecewise constant on each path interval [t_j, t_{j+1}); a(t)
// is evaluated at the Heun stage times. Many wavenumbers share one path and
// are advanced together so the inner loop vectorises.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <ostream>
#include <span>
#include <utility>
#include <vector>

#include "prufer_lab/error.hpp"
#include "prufer_lab/torus.hpp"

namespace prufer_lab {

inline constexpr double kPi = std::numbers::pi;

// Phases within this distance below a multiple of pi count as having reached it.
inline constexpr double kLevelTolerance = 1e-9;

struct PhaseOptions {
  int substeps = 1;  // Heun steps per path interval
};

namespace detail {

// cos and sin of |x| <= 0.5 from truncated Taylor series; error below 1e-13.
inline void small_cos_sin(double x, double& c, double& s) noexcept {
  const double x2 = x * x;
  c = 1.0 + x2 * (-1.0 / 2 + x2 * (1.0 / 24 + x2 * (-1.0 / 720 + x2 * (1.0 / 40320 +
          x2 * (-1.0 / 3628800 + x2 * (1.0 / 479001600))))));
  s = x * (1.0 + x2 * (-1.0 / 6 + x2 * (1.0 / 120 + x2 * (-1.0 / 5040 + x2 * (1.0 / 362880 +
          x2 * (-1.0 / 39916800 + x2 * (1.0 / 6227020800.0)))))));
}

inline std::size_t steps_for_horizon(const NoisePath& path, double horizon) {
  if (!(horizon >= 0.0)) throw ParameterError("horizon must be non-negative");
  const double ratio = horizon / path.dt;
  const auto steps = static_cast<std::size_t>(std::llround(ratio));
  if (std::abs(ratio - static_cast<double>(steps)) > 1e-6 * std::max(1.0, ratio)) {
    throw DimensionError("horizon is not a multiple of the path step");
  }
  if (steps > path.steps) throw DimensionError("noise path is shorter than the requested horizon");
  return steps;
}

}  // namespace detail

// a(t) at every Heun node t = m * dt / substeps, m = 0 .. end_step * substeps.
inline std::vector<double> decay_nodes(const PotentialSpec& spec, double dt, std::size_t end_step,
                                       int substeps) {
  const auto nodes = end_step * static_cast<std::size_t>(substeps) + 1;
  const double h = dt / substeps;
  std::vector<double> out(nodes);
  for (std::size_t m = 0; m < nodes; ++m) out[m] = eval_a(spec, static_cast<double>(m) * h);
  return out;
}

// Advances theta_t(kappa_i) for every kappa in `kappas` over the first
// `end_step` path intervals. After interval j the observer is called as
// observer(j + 1, thetas). Phases are unwrapped (continuous in t).
// `a_nodes` is the table produced by decay_nodes for the same step layout.
template <class Observer>
void integrate_phases(const NoisePath& path, std::span<const double> a_nodes, std::span<const double> kappas,
                      double theta0, std::size_t end_step, PhaseOptions options, Observer&& observer) {
  if (options.substeps < 1) throw ParameterError("substeps must be >= 1");
  if (end_step > path.steps) throw DimensionError("noise path is shorter than the requested horizon");
  const auto substeps = static_cast<std::size_t>(options.substeps);
  if (a_nodes.size() < end_step * substeps + 1) throw DimensionError("decay table shorter than the horizon");
  const std::size_t count = kappas.size();
  double kappa_min = 0.0;
  double kappa_max = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    if (!(kappas[i] > 0.0) || !std::isfinite(kappas[i])) throw ParameterError("kappa must be positive");
    kappa_min = i == 0 ? kappas[i] : std::min(kappa_min, kappas[i]);
    kappa_max = std::max(kappa_max, kappas[i]);
  }
  if (count == 0) return;

  const double h = path.dt / options.substeps;
  double f_max = 0.0;
  for (std::size_t j = 0; j < end_step; ++j) f_max = std::max(f_max, std::abs(path.f_values[j]));
  double a_max = 0.0;
  for (std::size_t m = 0; m <= end_step * substeps; ++m) a_max = std::max(a_max, std::abs(a_nodes[m]));
  const double rate_bound = kappa_max + a_max * f_max / kappa_min;
  if (h * rate_bound > 0.5) {
    throw ParameterError("Prufer step too large: dt * (kappa + max|aF|/kappa) must stay below 0.5");
  }

  std::vector<double> kap(kappas.begin(), kappas.end());
  std::vector<double> inv_kap(count);
  std::vector<double> sn(count, std::sin(theta0));
  std::vector<double> cs(count, std::cos(theta0));
  std::vector<double> theta(count, theta0);
  for (std::size_t i = 0; i < count; ++i) inv_kap[i] = 1.0 / kap[i];

  double* __restrict s_ptr = sn.data();
  double* __restrict c_ptr = cs.data();
  double* __restrict th_ptr = theta.data();
  const double* __restrict k_ptr = kap.data();
  const double* __restrict ik_ptr = inv_kap.data();

  for (std::size_t j = 0; j < end_step; ++j) {
    const double f = path.f_values[j];
    for (std::size_t sub = 0; sub < substeps; ++sub) {
      const std::size_t m = j * substeps + sub;
      const double q0 = a_nodes[m] * f;
      const double q1 = a_nodes[m + 1] * f;
      for (std::size_t i = 0; i < count; ++i) {
        const double s = s_ptr[i];
        const double c = c_ptr[i];
        const double k1 = k_ptr[i] - q0 * ik_ptr[i] * s * s;
        double cp, sp;
        detail::small_cos_sin(h * k1, cp, sp);
        const double s_pred = s * cp + c * sp;
        const double k2 = k_ptr[i] - q1 * ik_ptr[i] * s_pred * s_pred;
        const double delta = 0.5 * h * (k1 + k2);
        double cd, sd;
        detail::small_cos_sin(delta, cd, sd);
        const double s_new = s * cd + c * sd;
        const double c_new = c * cd - s * sd;
        const double fix = 0.5 * (3.0 - (s_new * s_new + c_new * c_new));
        s_ptr[i] = s_new * fix;
        c_ptr[i] = c_new * fix;
        th_ptr[i] += delta;
      }
    }
    observer(j + 1, std::span<const double>(theta));
  }
}

template <class Observer>
void integrate_phases(const NoisePath& path, const PotentialSpec& spec, std::span<const double> kappas,
                      double theta0, std::size_t end_step, PhaseOptions options, Observer&& observer) {
  if (options.substeps < 1) throw ParameterError("substeps must be >= 1");
  const auto a_nodes = decay_nodes(spec, path.dt, end_step, options.substeps);
  integrate_phases(path, std::span<const double>(a_nodes), kappas, theta0, end_step, options,
                   std::forward<Observer>(observer));
}

// theta_horizon(kappa) for each kappa, reusing a precomputed decay table.
inline std::vector<double> terminal_phases(const NoisePath& path, std::span<const double> a_nodes,
                                           std::span<const double> kappas, double horizon,
                                           double theta0 = 0.0, PhaseOptions options = {}) {
  const std::size_t end = detail::steps_for_horizon(path, horizon);
  std::vector<double> out(kappas.size(), theta0);
  integrate_phases(path, a_nodes, kappas, theta0, end, options, [&](std::size_t j, std::span<const double> th) {
    if (j == end) std::copy(th.begin(), th.end(), out.begin());
  });
  return out;
}

// theta_horizon(kappa) for each kappa.
inline std::vector<double> terminal_phases(const NoisePath& path, const PotentialSpec& spec,
                                           std::span<const double> kappas, double horizon,
                                           double theta0 = 0.0, PhaseOptions options = {}) {
  const std::size_t end = detail::steps_for_horizon(path, horizon);
  std::vector<double> out(kappas.size(), theta0);
  integrate_phases(path, spec, kappas, theta0, end, options,
                   [&](std::size_t j, std::span<const double> th) {
                     if (j == end) std::copy(th.begin(), th.end(), out.begin());
                   });
  return out;
}

struct PruferTrajectory {
  double kappa = 0.0;
  double grid_dt = 0.0;
  double theta0 = 0.0;
  std::vector<double> thetas;  // thetas[j] = theta at t = j * grid_dt

  // theta_t - kappa t
  double tilde(std::size_t j) const { return thetas[j] - theta0 - kappa * grid_dt * static_cast<double>(j); }
};

// Phase along the whole path.
inline PruferTrajectory integrate_phase(const NoisePath& path, const PotentialSpec& spec, double kappa,
                                        double theta0 = 0.0, PhaseOptions options = {}) {
  if (!(kappa > 0.0)) throw ParameterError("kappa must be positive");
  PruferTrajectory traj;
  traj.kappa = kappa;
  traj.grid_dt = path.dt;
  traj.theta0 = theta0;
  traj.thetas.resize(path.steps + 1);
  traj.thetas[0] = theta0;
  const double k[1] = {kappa};
  integrate_phases(path, spec, std::span<const double>(k), theta0, path.steps, options,
                   [&](std::size_t j, std::span<const double> th) { traj.thetas[j] = th[0]; });
  return traj;
}

// {x}_pi = x - floor(x / pi) pi, in [0, pi).
inline double fractional(double theta) {
  double r = std::fmod(theta, kPi);
  if (r < 0.0) r += kPi;
  const double slack = 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(theta));
  if (r >= kPi - slack || r <= slack) return 0.0;
  return r;
}

// floor(theta / pi) with the level tolerance applied.
inline long oscillation_level(double theta) {
  return static_cast<long>(std::floor((theta + kLevelTolerance) / kPi));
}

// Theta_L(lambda) = theta(sqrt(e0) + lambda / L) - theta(sqrt(e0)) on the path grid up to L.
struct RelativePhase {
  double lambda = 0.0;
  double L = 0.0;
  double grid_dt = 0.0;
  std::vector<double> big_theta;
  double phi = 0.0;  // {theta_L(sqrt(e0))}_pi

  double time(std::size_t j) const { return grid_dt * static_cast<double>(j); }
};

inline std::vector<RelativePhase> relative_phases(const NoisePath& path, const PotentialSpec& spec, double e0,
                                                  std::span<const double> lambdas, double L,
                                                  PhaseOptions options = {}) {
  if (!(e0 > 0.0)) throw ParameterError("e0 must be positive");
  if (!(L > 0.0)) throw ParameterError("L must be positive");
  const double kappa0 = std::sqrt(e0);
  std::vector<double> kappas{kappa0};
  for (double lam : lambdas) {
    const double k = kappa0 + lam / L;
    if (!(k > 0.0)) throw ParameterError("sqrt(e0) + lambda / L must be positive");
    kappas.push_back(k);
  }
  const std::size_t end = detail::steps_for_horizon(path, L);
  std::vector<RelativePhase> out(lambdas.size());
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    out[i].lambda = lambdas[i];
    out[i].L = L;
    out[i].grid_dt = path.dt;
    out[i].big_theta.assign(end + 1, 0.0);
  }
  double theta_base = 0.0;
  integrate_phases(path, spec, kappas, 0.0, end, options, [&](std::size_t j, std::span<const double> th) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i].big_theta[j] = th[i + 1] - th[0];
    if (j == end) theta_base = th[0];
  });
  for (auto& r : out) r.phi = fractional(theta_base);
  return out;
}

inline RelativePhase relative_phase(const NoisePath& path, const PotentialSpec& spec, double e0, double lambda,
                                    double L, PhaseOptions options = {}) {
  const double lam[1] = {lambda};
  return std::move(relative_phases(path, spec, e0, std::span<const double>(lam), L, options).front());
}

struct Jump {
  double time = 0.0;
  long level = 0;
};

struct JumpExtraction {
  std::vector<Jump> jumps;
  std::size_t early_violations = 0;  // downward level steps before t_min (discarded)
  std::size_t late_violations = 0;   // downward level steps at or after t_min
};

// Times after t_min at which floor(values / pi) reaches a new record level,
// one entry per level, located by linear interpolation between grid points.
inline JumpExtraction jump_times(std::span<const double> values, double grid_dt, double t_min) {
  JumpExtraction out;
  if (values.empty()) return out;
  auto level_of = [](double v) { return static_cast<long>(std::floor(v / kPi)); };
  std::size_t start = 0;
  while (start < values.size() && grid_dt * static_cast<double>(start) < t_min) ++start;
  for (std::size_t j = 1; j < std::min(start + 1, values.size()); ++j) {
    if (level_of(values[j]) < level_of(values[j - 1])) ++out.early_violations;
  }
  if (start >= values.size()) return out;
  long record = level_of(values[start]);
  for (std::size_t j = start + 1; j < values.size(); ++j) {
    const long prev = level_of(values[j - 1]);
    const long cur = level_of(values[j]);
    if (cur < prev) ++out.late_violations;
    if (cur > record) {
      const double v0 = values[j - 1];
      const double v1 = values[j];
      for (long k = record + 1; k <= cur; ++k) {
        const double target = kPi * static_cast<double>(k);
        double frac = 1.0;
        if (v1 > v0 && target > v0) frac = std::clamp((target - v0) / (v1 - v0), 0.0, 1.0);
        out.jumps.push_back({grid_dt * (static_cast<double>(j - 1) + frac), k});
      }
      record = cur;
    }
  }
  return out;
}

inline JumpExtraction jump_times(const RelativePhase& rel, double t_min) {
  return jump_times(rel.big_theta, rel.grid_dt, t_min);
}

inline void write_trajectory_csv(std::ostream& out, const PruferTrajectory& traj) {
  out << "t,theta\n";
  for (std::size_t j = 0; j < traj.thetas.size(); ++j) {
    out << traj.grid_dt * static_cast<double>(j) << ',' << traj.thetas[j] << '\n';
  }
}

}  // namespace prufer_lab
