#pragma once

// Limiting diffusions of the relative Prufer phase:
//
//  * the Sine_beta phase SDE
//      d alpha = lambda (beta/4) e^{-beta t/4} dt + Re[(e^{i alpha} - 1) dZ],
//  * the reduced relative-phase SDE
//      d Theta = lambda dt + n^{1/2 - alpha} Re[(e^{2i Theta} - 1) t^{-alpha} dZ],
//  * the log-tan (Riccati) diffusion
//      dR = (lambda w(t) cosh R + C_n^2/2 tanh R) dt + C_n dW,
//    with w = 1 or gamma t^{gamma-1}, and its stationary envelopes S_+ / S_-.
//
// A Riccati-type process explodes to +infinity in finite time; it is stopped
// at r_cap, the time is recorded and the process restarts at -r_cap.
//
// Complex Brownian motion Z = X + iY has independent real and imaginary parts,
// each of variance complex_bm_variance / 2 per unit time.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <vector>

#include "prufer_lab/error.hpp"
#include "prufer_lab/prufer.hpp"
#include "prufer_lab/rng.hpp"
#include "prufer_lab/torus.hpp"

namespace prufer_lab {

enum class SdeKind { kSineBeta, kRelativePhase, kRiccati, kStationaryPlus, kStationaryMinus };
enum class TimePower { kUniform, kGammaPower };
enum class EnvelopeKind { kCoshPlus, kCoshMinus, kTanhPlusEps, kTanhMinusEps };

// Drift envelopes over the window |s - r| < delta; tanh envelopes carry the
// epsilon tilt switched at r = -delta (upper) and r = +delta (lower).
inline double envelope(EnvelopeKind kind, double r, double delta, double epsilon) {
  if (delta < 0.0) throw ParameterError("delta must be non-negative");
  if (epsilon < 0.0 || epsilon >= 1.0) throw ParameterError("epsilon must lie in [0, 1)");
  switch (kind) {
    case EnvelopeKind::kCoshPlus:
      return std::cosh(std::abs(r) + delta);
    case EnvelopeKind::kCoshMinus:
      return std::cosh(std::max(std::abs(r) - delta, 0.0));
    case EnvelopeKind::kTanhPlusEps:
      return (r > -delta ? 1.0 + epsilon : 1.0 - epsilon) * std::tanh(r + delta);
    case EnvelopeKind::kTanhMinusEps:
      return (r > delta ? 1.0 - epsilon : 1.0 + epsilon) * std::tanh(r - delta);
  }
  return 0.0;
}

struct SdeConfig {
  double c_n = 20.0;
  double lambda = kPi;
  double gamma = 2.5;
  double delta = 0.01;
  double epsilon = 0.01;
  double dt = 1e-4;
  double r_cap = 15.0;
  std::optional<double> r0;  // start value; -r_cap when unset
  // Step control: h * max(|drift|, |drift'|) <= step_limit, so explosions are
  // resolved and the Euler map stays monotone (needed for pathwise comparison).
  double step_limit = 0.05;
  std::size_t record_every = 0;  // 0: record start, restarts and end only
  SeedKey seed;

  double start() const noexcept { return r0.value_or(-r_cap); }
};

inline void validate(const SdeConfig& config) {
  if (!(config.c_n >= 0.0) || !std::isfinite(config.c_n)) throw ParameterError("c_n must be non-negative");
  if (!std::isfinite(config.lambda)) throw ParameterError("lambda must be finite");
  if (!(config.gamma > 1.0)) throw ParameterError("gamma must exceed 1");
  if (!(config.delta >= 0.0)) throw ParameterError("delta must be non-negative");
  if (!(config.epsilon >= 0.0 && config.epsilon < 1.0)) throw ParameterError("epsilon must lie in [0, 1)");
  if (!(config.dt > 0.0)) throw ParameterError("dt must be positive");
  if (!(config.r_cap > 0.0)) throw ParameterError("r_cap must be positive");
  if (!(config.step_limit > 0.0)) throw ParameterError("step_limit must be positive");
  if (config.r0 && !(*config.r0 < config.r_cap)) throw ParameterError("r0 must lie below r_cap");
}

// Scaling constants of the comparison diffusions derived from the operator.
struct OperatorScaling {
  double gamma = 0.0;     // 1 / (1 - 2 alpha)
  double c_n = 0.0;       // (1/kappa0) (psi/2)^{1/2} gamma^{1/2} n^{1/(2 gamma)}
  double delta = 0.0;     // delta_const * n^{-alpha}
  double epsilon = 0.0;   // eps_const * n^{-(j0 alpha - 1)}
  int j0 = 0;             // min{ j : 1 - j alpha < 0 }
  double eps_exponent = 0.0;
};

inline OperatorScaling operator_scaling(const SpectralConstants& constants, double alpha, double n,
                                        double delta_const = 1.0, double eps_const = 1.0) {
  if (!(alpha > 0.0 && alpha < 0.5)) throw ParameterError("alpha must lie in (0, 1/2)");
  if (!(n > 0.0)) throw ParameterError("n must be positive");
  OperatorScaling s;
  s.gamma = 1.0 / (1.0 - 2.0 * alpha);
  s.c_n = std::sqrt(constants.psi_mean / 2.0) / constants.kappa0 * std::sqrt(s.gamma) *
          std::pow(n, 1.0 / (2.0 * s.gamma));
  s.j0 = static_cast<int>(std::floor(1.0 / alpha)) + 1;
  s.eps_exponent = s.j0 * alpha - 1.0;
  s.delta = delta_const * std::pow(n, -alpha);
  s.epsilon = eps_const * std::pow(n, -s.eps_exponent);
  return s;
}

struct SdePath {
  SdeKind kind = SdeKind::kRiccati;
  std::vector<double> times;
  std::vector<double> values;
  std::vector<double> explosions;
  std::size_t restarts = 0;
  std::size_t steps = 0;
};

// (explosion count) pi + 2 arctan(e^r): the Riccati state lifted back to a phase.
inline double lifted_phase(double r, std::size_t branch) {
  return kPi * static_cast<double>(branch) + 2.0 * std::atan(std::exp(r));
}

namespace detail {

inline double riccati_drift(SdeKind kind, const SdeConfig& c, double weight, double r) {
  const double half_c2 = 0.5 * c.c_n * c.c_n;
  switch (kind) {
    case SdeKind::kStationaryPlus:
      return c.lambda * (1.0 + c.epsilon) * weight * envelope(EnvelopeKind::kCoshPlus, r, c.delta, c.epsilon) +
             half_c2 * envelope(EnvelopeKind::kTanhPlusEps, r, c.delta, c.epsilon);
    case SdeKind::kStationaryMinus:
      return c.lambda * (1.0 - c.epsilon) * weight * envelope(EnvelopeKind::kCoshMinus, r, c.delta, c.epsilon) +
             half_c2 * envelope(EnvelopeKind::kTanhMinusEps, r, c.delta, c.epsilon);
    default:
      return c.lambda * weight * std::cosh(r) + half_c2 * std::tanh(r);
  }
}

// Common bound on |b| and |b'| for every Riccati-type drift at state r.
inline double riccati_rate_bound(const SdeConfig& c, double weight, double r) {
  return std::abs(c.lambda) * (1.0 + c.epsilon) * weight * std::cosh(std::abs(r) + c.delta) +
         0.5 * c.c_n * c.c_n * (1.0 + c.epsilon);
}

inline double time_weight(TimePower power, double gamma, double t) {
  return power == TimePower::kUniform ? 1.0 : gamma * std::pow(t, gamma - 1.0);
}

}  // namespace detail

struct CoupledRunOptions {
  TimePower time_power = TimePower::kUniform;
  double horizon = 1.0;
  // Stop once this many explosions of the first member have been recorded (0: run to horizon).
  std::size_t stop_after_explosions = 0;
};

// Integrates several Riccati-type processes on one Brownian path and one
// shared (adaptive) time grid. After every step the observer is called as
// observer(t, values, branches) where branches counts explosions so far.
template <class Observer>
std::vector<SdePath> simulate_coupled(std::span<const SdeKind> kinds, const SdeConfig& config,
                                      CoupledRunOptions run, Observer&& observer) {
  validate(config);
  if (!(run.horizon > 0.0)) throw ParameterError("horizon must be positive");
  for (SdeKind k : kinds) {
    if (k != SdeKind::kRiccati && k != SdeKind::kStationaryPlus && k != SdeKind::kStationaryMinus) {
      throw ParameterError("simulate_coupled handles Riccati-type kinds only");
    }
  }
  const std::size_t m = kinds.size();
  std::vector<SdePath> paths(m);
  std::vector<double> r(m, config.start());
  std::vector<std::size_t> branch(m, 0);
  for (std::size_t i = 0; i < m; ++i) {
    paths[i].kind = kinds[i];
    paths[i].times.push_back(0.0);
    paths[i].values.push_back(r[i]);
  }
  if (m == 0) return paths;

  Engine engine = make_engine(config.seed, Stream::kSdeNoise);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double gamma_weight_max = run.time_power == TimePower::kUniform
                                      ? 1.0
                                      : config.gamma * std::pow(run.horizon, config.gamma - 1.0);
  double t = 0.0;
  std::size_t step = 0;
  while (t < run.horizon) {
    double base = config.dt;
    double bound = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      if (std::abs(r[i]) > config.r_cap - 3.0) base = config.dt / 8.0;
      bound = std::max(bound, detail::riccati_rate_bound(config, gamma_weight_max, r[i]));
    }
    double h = std::min(base, config.step_limit / bound);
    h = std::min(h, run.horizon - t);
    if (!(h > 0.0)) break;
    const double weight = detail::time_weight(run.time_power, config.gamma, t);
    const double dw = config.c_n * std::sqrt(h) * normal(engine);
    t += h;
    ++step;
    for (std::size_t i = 0; i < m; ++i) {
      r[i] += detail::riccati_drift(kinds[i], config, weight, r[i]) * h + dw;
      if (r[i] >= config.r_cap) {
        paths[i].explosions.push_back(t);
        paths[i].restarts += 1;
        branch[i] += 1;
        r[i] = -config.r_cap;
        paths[i].times.push_back(t);
        paths[i].values.push_back(r[i]);
      } else if (config.record_every > 0 && step % config.record_every == 0) {
        paths[i].times.push_back(t);
        paths[i].values.push_back(r[i]);
      }
    }
    observer(t, std::span<const double>(r), std::span<const std::size_t>(branch));
    if (run.stop_after_explosions > 0 && paths[0].explosions.size() >= run.stop_after_explosions) break;
  }
  for (std::size_t i = 0; i < m; ++i) {
    paths[i].steps = step;
    if (paths[i].times.back() != t) {
      paths[i].times.push_back(t);
      paths[i].values.push_back(r[i]);
    }
  }
  return paths;
}

inline std::vector<SdePath> simulate_coupled(std::span<const SdeKind> kinds, const SdeConfig& config,
                                             CoupledRunOptions run) {
  return simulate_coupled(kinds, config, run, [](double, std::span<const double>, std::span<const std::size_t>) {});
}

inline SdePath simulate_riccati(const SdeConfig& config, TimePower time_power, double horizon,
                                std::size_t stop_after_explosions = 0) {
  const SdeKind kind[1] = {SdeKind::kRiccati};
  return std::move(simulate_coupled(std::span<const SdeKind>(kind), config,
                                    {time_power, horizon, stop_after_explosions})
                       .front());
}

// S_+ (sign > 0) or S_- (sign < 0).
inline SdePath simulate_stationary(const SdeConfig& config, int sign, double horizon,
                                   std::size_t stop_after_explosions = 0) {
  if (sign == 0) throw ParameterError("sign must be +1 or -1");
  const SdeKind kind[1] = {sign > 0 ? SdeKind::kStationaryPlus : SdeKind::kStationaryMinus};
  return std::move(simulate_coupled(std::span<const SdeKind>(kind), config,
                                    {TimePower::kUniform, horizon, stop_after_explosions})
                       .front());
}

struct SandwichCheck {
  std::size_t grid_points = 0;
  std::size_t violations = 0;
  double worst_gap = 0.0;  // most negative (upper - lower) lifted difference seen
};

// Runs S_-, R, S_+ on shared noise from a shared start and checks
// S_- <= R <= S_+ (in lifted phase) at every step.
inline SandwichCheck check_sandwich(const SdeConfig& config, double horizon, double tolerance = 1e-6) {
  const SdeKind kinds[3] = {SdeKind::kStationaryMinus, SdeKind::kRiccati, SdeKind::kStationaryPlus};
  SandwichCheck check;
  check.worst_gap = std::numeric_limits<double>::infinity();
  simulate_coupled(std::span<const SdeKind>(kinds), config, {TimePower::kUniform, horizon, 0},
                   [&](double, std::span<const double> r, std::span<const std::size_t> b) {
                     const double lo = lifted_phase(r[0], b[0]);
                     const double mid = lifted_phase(r[1], b[1]);
                     const double hi = lifted_phase(r[2], b[2]);
                     ++check.grid_points;
                     const double gap = std::min(mid - lo, hi - mid);
                     check.worst_gap = std::min(check.worst_gap, gap);
                     if (gap < -tolerance) ++check.violations;
                   });
  return check;
}

// Sine_beta ---------------------------------------------------------------

struct SineBetaOptions {
  double horizon = 600.0;
  double dt = 0.005;
  double complex_bm_variance = 2.0;
  std::size_t record_every = 0;  // 0: no path storage
};

struct SineBetaResult {
  std::vector<double> lambdas;
  std::vector<double> terminal;        // alpha_T(lambda)
  std::vector<long> windings;          // round(alpha_T / 2 pi)
  std::vector<double> snap_distance;   // |alpha_T - 2 pi windings|
  std::vector<long> counts;            // windings[i+1] - windings[i]
  std::vector<SdePath> paths;          // filled when record_every > 0
  bool far_from_lattice = false;       // some terminal value farther than 0.5 from 2 pi Z
};

inline SineBetaResult simulate_sine_beta(double beta, std::span<const double> lambdas, SineBetaOptions options,
                                         SeedKey seed) {
  if (!(beta > 0.0)) throw ParameterError("beta must be positive");
  if (!(options.horizon > 0.0) || !(options.dt > 0.0)) throw ParameterError("horizon and dt must be positive");
  if (!(options.complex_bm_variance > 0.0)) throw ParameterError("complex_bm_variance must be positive");
  for (std::size_t i = 1; i < lambdas.size(); ++i) {
    if (lambdas[i] < lambdas[i - 1]) throw ParameterError("lambdas must be sorted");
  }
  const std::size_t m = lambdas.size();
  SineBetaResult out;
  out.lambdas.assign(lambdas.begin(), lambdas.end());
  std::vector<double> a(m, 0.0);
  if (options.record_every > 0) {
    out.paths.resize(m);
    for (auto& p : out.paths) {
      p.kind = SdeKind::kSineBeta;
      p.times.push_back(0.0);
      p.values.push_back(0.0);
    }
  }
  Engine engine = make_engine(seed, Stream::kSdeNoise);
  std::normal_distribution<double> normal(0.0, 1.0);
  const auto steps = static_cast<std::size_t>(std::ceil(options.horizon / options.dt - 1e-9));
  const double component_sd = std::sqrt(0.5 * options.complex_bm_variance);
  double t = 0.0;
  for (std::size_t s = 0; s < steps; ++s) {
    const double h = std::min(options.dt, options.horizon - t);
    const double drift = 0.25 * beta * std::exp(-0.25 * beta * t) * h;
    const double dx = component_sd * std::sqrt(h) * normal(engine);
    const double dy = component_sd * std::sqrt(h) * normal(engine);
    t += h;
    for (std::size_t i = 0; i < m; ++i) {
      a[i] += lambdas[i] * drift + (std::cos(a[i]) - 1.0) * dx - std::sin(a[i]) * dy;
    }
    if (options.record_every > 0 && (s + 1) % options.record_every == 0) {
      for (std::size_t i = 0; i < m; ++i) {
        out.paths[i].times.push_back(t);
        out.paths[i].values.push_back(a[i]);
      }
    }
  }
  constexpr double kTwoPi = 2.0 * kPi;
  out.terminal = a;
  for (std::size_t i = 0; i < m; ++i) {
    const long w = std::lround(a[i] / kTwoPi);
    out.windings.push_back(w);
    out.snap_distance.push_back(std::abs(a[i] - kTwoPi * static_cast<double>(w)));
    if (out.snap_distance.back() > 0.5) out.far_from_lattice = true;
    if (options.record_every > 0) out.paths[i].steps = steps;
  }
  for (std::size_t i = 0; i + 1 < m; ++i) out.counts.push_back(out.windings[i + 1] - out.windings[i]);
  return out;
}

// Reduced relative-phase SDE ----------------------------------------------

struct RelativePhaseSde {
  double alpha = 0.3;
  double n = 1e4;
  double dt = 2e-6;
  double t_floor = 1e-3;
  double horizon = 1.0;
  std::optional<double> noise_scale;  // n^{1/2 - alpha} when unset
  double complex_bm_variance = 2.0;
  std::size_t record_every = 0;  // 0: start and end only
};

struct RelativePhaseSdeResult {
  std::vector<SdePath> paths;             // one per lambda, kind kRelativePhase
  std::vector<std::vector<Jump>> jumps;   // record-level crossings of floor(Theta / pi)
};

// All lambdas share one complex noise path. Theta starts at lambda * t_floor
// at t = t_floor (the drift over [0, t_floor]).
inline RelativePhaseSdeResult simulate_relative_phase(const RelativePhaseSde& sde, std::span<const double> lambdas,
                                                      SeedKey seed) {
  if (!(sde.alpha > 0.0 && sde.alpha < 0.5)) throw ParameterError("alpha must lie in (0, 1/2)");
  if (!(sde.n > 0.0) || !(sde.dt > 0.0)) throw ParameterError("n and dt must be positive");
  if (!(sde.t_floor > 0.0 && sde.t_floor < sde.horizon)) throw ParameterError("need 0 < t_floor < horizon");
  if (!(sde.complex_bm_variance > 0.0)) throw ParameterError("complex_bm_variance must be positive");
  const double scale = sde.noise_scale.value_or(std::pow(sde.n, 0.5 - sde.alpha));
  const std::size_t m = lambdas.size();
  RelativePhaseSdeResult out;
  out.paths.resize(m);
  out.jumps.resize(m);
  std::vector<double> theta(m);
  std::vector<long> record(m);
  for (std::size_t i = 0; i < m; ++i) {
    theta[i] = lambdas[i] * sde.t_floor;
    record[i] = static_cast<long>(std::floor(theta[i] / kPi));
    out.paths[i].kind = SdeKind::kRelativePhase;
    out.paths[i].times.push_back(sde.t_floor);
    out.paths[i].values.push_back(theta[i]);
  }
  Engine engine = make_engine(seed, Stream::kSdeNoise);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double component_sd = std::sqrt(0.5 * sde.complex_bm_variance);
  const auto steps = static_cast<std::size_t>(std::ceil((sde.horizon - sde.t_floor) / sde.dt - 1e-9));
  double t = sde.t_floor;
  for (std::size_t s = 0; s < steps; ++s) {
    const double h = std::min(sde.dt, sde.horizon - t);
    const double amp = scale * std::pow(t, -sde.alpha) * component_sd * std::sqrt(h);
    const double dx = amp * normal(engine);
    const double dy = amp * normal(engine);
    const double t_next = t + h;
    for (std::size_t i = 0; i < m; ++i) {
      const double prev = theta[i];
      const double c2 = std::cos(2.0 * prev);
      const double s2 = std::sin(2.0 * prev);
      theta[i] = prev + lambdas[i] * h + (c2 - 1.0) * dx - s2 * dy;
      const long lev = static_cast<long>(std::floor(theta[i] / kPi));
      if (lev > record[i]) {
        for (long k = record[i] + 1; k <= lev; ++k) {
          const double target = kPi * static_cast<double>(k);
          double frac = 1.0;
          if (theta[i] > prev && target > prev) frac = std::clamp((target - prev) / (theta[i] - prev), 0.0, 1.0);
          out.jumps[i].push_back({t + frac * h, k});
        }
        record[i] = lev;
      }
    }
    t = t_next;
    const bool last = s + 1 == steps;
    if (last || (sde.record_every > 0 && (s + 1) % sde.record_every == 0)) {
      for (std::size_t i = 0; i < m; ++i) {
        out.paths[i].times.push_back(t);
        out.paths[i].values.push_back(theta[i]);
      }
    }
  }
  for (auto& p : out.paths) p.steps = steps;
  return out;
}

inline void write_path_csv(std::ostream& out, const SdePath& path) {
  out << "t,value\n";
  for (std::size_t i = 0; i < path.times.size(); ++i) out << path.times[i] << ',' << path.values[i] << '\n';
}

}  // namespace prufer_lab
