#pragma once

// Mean explosion time of the stationary comparison diffusion
//   dS = -W(S) dt + C dW_t,   -W(r) = lambda (1 +- eps) cosh_+-(r) + (C^2/2) tanh_{+-,eps}(r),
// from the potential V (V' = W, V(0) = 0) and the exit-time double integral
//   t(r) = (2/C^2) int_r^inf dx int_{-inf}^x exp{(2/C^2)(V(x) - V(y))} dy.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <utility>
#include <vector>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>

#include "prufer_lab/error.hpp"
#include "prufer_lab/limit_sde.hpp"

namespace prufer_lab {

namespace detail {

// log cosh without overflow.
inline double log_cosh(double x) {
  const double a = std::abs(x);
  return a + std::log1p(std::exp(-2.0 * a)) - std::log(2.0);
}

}  // namespace detail

struct DriftPotential {
  double c_n = 20.0;
  double lambda = kPi;
  double delta = 0.01;
  double epsilon = 0.01;
  int sign = +1;  // +1: upper envelope S_+, -1: lower envelope S_-

  DriftPotential() = default;
  DriftPotential(double c, double lam, double d, double eps, int s = +1)
      : c_n(c), lambda(lam), delta(d), epsilon(eps), sign(s) {
    if (!(c_n > 0.0) || !std::isfinite(c_n)) throw ParameterError("c_n must be positive");
    if (!std::isfinite(lambda)) throw ParameterError("lambda must be finite");
    if (!(delta >= 0.0)) throw ParameterError("delta must be non-negative");
    if (!(epsilon >= 0.0 && epsilon < 1.0)) throw ParameterError("epsilon must lie in [0, 1)");
    if (sign != 1 && sign != -1) throw ParameterError("sign must be +1 or -1");
  }

  static DriftPotential from_config(const SdeConfig& c, int sign = +1) {
    return {c.c_n, c.lambda, c.delta, c.epsilon, sign};
  }

  double lambda_tilde() const noexcept { return (1.0 + epsilon) * lambda / (1.0 - epsilon); }
  double half_c2() const noexcept { return 0.5 * c_n * c_n; }

  // Drift of S (= -W).
  double drift(double r) const {
    if (sign > 0) {
      return lambda * (1.0 + epsilon) * envelope(EnvelopeKind::kCoshPlus, r, delta, epsilon) +
             half_c2() * envelope(EnvelopeKind::kTanhPlusEps, r, delta, epsilon);
    }
    return lambda * (1.0 - epsilon) * envelope(EnvelopeKind::kCoshMinus, r, delta, epsilon) +
           half_c2() * envelope(EnvelopeKind::kTanhMinusEps, r, delta, epsilon);
  }

  double W(double r) const { return -drift(r); }

  // Integrated piecewise; continuous at the kinks r = 0, +-delta.
  double V(double r) const {
    using detail::log_cosh;
    const double d = delta;
    double h = 0.0;
    double g = 0.0;
    if (sign > 0) {
      h = r >= 0.0 ? std::sinh(r + d) - std::sinh(d) : std::sinh(r - d) + std::sinh(d);
      g = r >= -d ? (1.0 + epsilon) * (log_cosh(r + d) - log_cosh(d))
                  : (1.0 - epsilon) * log_cosh(r + d) - (1.0 + epsilon) * log_cosh(d);
      return -(lambda * (1.0 + epsilon) * h + half_c2() * g);
    }
    if (r > d) {
      h = d + std::sinh(r - d);
    } else if (r < -d) {
      h = -d + std::sinh(r + d);
    } else {
      h = r;
    }
    g = r <= d ? (1.0 + epsilon) * (log_cosh(r - d) - log_cosh(d))
               : (1.0 - epsilon) * log_cosh(r - d) - (1.0 + epsilon) * log_cosh(d);
    return -(lambda * (1.0 - epsilon) * h + half_c2() * g);
  }
};

struct CriticalPoints {
  double a_n = 0.0;  // well: stable zero of the drift
  double b_n = 0.0;  // barrier: unstable zero of the drift
};

// Asymptotic locations for C_n^2 >> lambda_tilde.
inline CriticalPoints asymptotic_critical_points(const DriftPotential& pot) {
  const double lt = pot.lambda_tilde();
  const double c2 = pot.c_n * pot.c_n;
  return {pot.delta + std::log(lt / c2), -2.0 * lt / c2 * std::cosh(2.0 * pot.delta) - pot.delta};
}

// Both zeros of the drift on the negative half-line, root-polished by TOMS 748.
// Throws AsymptoticRegimeError when the drift has no sign change there.
inline CriticalPoints critical_points(const DriftPotential& pot) {
  if (!(pot.lambda > 0.0)) throw AsymptoticRegimeError("critical points need lambda > 0");
  const auto seed = asymptotic_critical_points(pot);
  const double edge = pot.sign > 0 ? -pot.delta : pot.delta;  // drift smooth and convex left of edge
  const auto f = [&](double r) { return pot.drift(r); };

  double lo = std::min(seed.a_n, edge) - 1.0;
  for (int i = 0; f(lo) <= 0.0; ++i, lo -= 1.0) {
    if (i > 700) throw AsymptoticRegimeError("drift does not turn positive on the far left");
  }
  const auto [r_min, f_min] =
      boost::math::tools::brent_find_minima(f, lo, edge, std::numeric_limits<double>::digits / 2);
  if (!(f_min < 0.0)) {
    throw AsymptoticRegimeError("drift has no negative region: C_n^2 is not large against lambda");
  }
  const double right = pot.sign > 0 ? 0.0 : pot.delta;
  if (!(f(right) > 0.0)) throw AsymptoticRegimeError("drift not positive at the barrier edge");

  const auto tol = boost::math::tools::eps_tolerance<double>(std::numeric_limits<double>::digits - 3);
  std::uintmax_t iters = 200;
  const auto a = boost::math::tools::toms748_solve(f, lo, r_min, tol, iters);
  iters = 200;
  const auto b = boost::math::tools::toms748_solve(f, r_min, right, tol, iters);
  return {0.5 * (a.first + a.second), 0.5 * (b.first + b.second)};
}

struct QuadratureOptions {
  double initial_step = 0.02;
  double stability = 1e-9;    // relative change accepted between refinements
  double steep_rate = 200.0;  // switch to the quasi-steady tail once (2/C^2) drift exceeds this
  int max_refinements = 12;   // step halvings
  int max_doublings = 10;     // left truncation doublings
};

namespace detail {

inline std::vector<double> split_points(const DriftPotential& pot, double r, double lo, double hi) {
  std::vector<double> pts{lo, hi, r, 0.0, -pot.delta, pot.delta};
  try {
    const auto cp = critical_points(pot);
    pts.push_back(cp.a_n);
    pts.push_back(cp.b_n);
  } catch (const AsymptoticRegimeError&) {
  }
  std::vector<double> out;
  for (double p : pts) {
    if (p >= lo && p <= hi) out.push_back(p);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

// Away from the kinks the drift is A cosh(x - sa) + B tanh(x - sb).
struct SmoothDrift {
  double A, sa, B, sb;
  double b0(double x) const { return A * std::cosh(x - sa) + B * std::tanh(x - sb); }
  double b1(double x) const {
    const double sech = 1.0 / std::cosh(x - sb);
    return A * std::sinh(x - sa) + B * sech * sech;
  }
  double b2(double x) const {
    const double sech = 1.0 / std::cosh(x - sb);
    return A * std::cosh(x - sa) - 2.0 * B * std::tanh(x - sb) * sech * sech;
  }
};

inline SmoothDrift right_drift(const DriftPotential& pot) {
  const double d = pot.delta;
  if (pot.sign > 0) return {pot.lambda * (1.0 + pot.epsilon), -d, pot.half_c2() * (1.0 + pot.epsilon), -d};
  return {pot.lambda * (1.0 - pot.epsilon), d, pot.half_c2() * (1.0 - pot.epsilon), d};
}

inline SmoothDrift left_drift(const DriftPotential& pot) {
  const double d = pot.delta;
  if (pot.sign > 0) return {pot.lambda * (1.0 + pot.epsilon), d, pot.half_c2() * (1.0 - pot.epsilon), -d};
  return {pot.lambda * (1.0 - pot.epsilon), -d, pot.half_c2() * (1.0 + pot.epsilon), d};
}

// K = int_{-inf}^x exp{u (V(x) - V(y))} dy solves K' = 1 - u b K. Where u b is
// large, K follows 1/(u b) + b'/(u^2 b^3) + ... up to a transient of width 1/(u b).
inline double quasi_steady(const SmoothDrift& d, double u, double x) {
  const double b = d.b0(x);
  const double beta = u * b;
  if (!std::isfinite(beta)) return 0.0;
  const double rho1 = d.b1(x) / b;
  const double rho2 = d.b2(x) / b;
  return (1.0 + rho1 / beta + (3.0 * rho1 * rho1 - rho2) / (beta * beta)) / beta;
}

// u int_X^inf K dx given K(X).
inline double tail_contribution(const DriftPotential& pot, double X, double k_at_x) {
  const double u = 2.0 / (pot.c_n * pot.c_n);
  const auto d = right_drift(pot);
  const auto f = [&](double x) { return quasi_steady(d, u, x); };
  boost::math::quadrature::exp_sinh<double> integrator;
  const double steady = integrator.integrate([&](double t) { return f(X + t); });
  return u * steady + (k_at_x - quasi_steady(d, u, X)) / d.b0(X);
}

// Composite trapezoid on a grid with nodes at every kink and critical point,
// started from the quasi-steady value at the left end and closed by the tail
// beyond the right end. K is carried cell to cell as
//   K_{k+1} = e^{u (V_{k+1} - V_k)} (K_k + h/2) + h/2,
// which never forms the separately overflowing factors.
inline double trapezoid_pass(const DriftPotential& pot, double r, std::span<const double> pts, double step,
                             std::size_t refine) {
  const double u = 2.0 / (pot.c_n * pot.c_n);
  double k_prev = quasi_steady(left_drift(pot), u, pts.front());
  double v_prev = pot.V(pts.front());
  double x_prev = pts.front();
  double outer = 0.0;
  for (std::size_t s = 0; s + 1 < pts.size(); ++s) {
    const double a = pts[s];
    const double b = pts[s + 1];
    const auto cells = static_cast<std::size_t>(std::max(1.0, std::ceil((b - a) / step))) * refine;
    const double h = (b - a) / static_cast<double>(cells);
    for (std::size_t c = 1; c <= cells; ++c) {
      const double x = c == cells ? b : a + h * static_cast<double>(c);
      const double v = pot.V(x);
      const double k = std::exp(u * (v - v_prev)) * (k_prev + 0.5 * h) + 0.5 * h;
      if (x_prev >= r) outer += 0.5 * h * (k_prev + k);
      k_prev = k;
      v_prev = v;
      x_prev = x;
    }
  }
  return u * outer + tail_contribution(pot, pts.back(), k_prev);
}

// Step halving with Richardson extrapolation (the trapezoid error is even in h
// on every smooth piece).
inline double refined_quadrature(const DriftPotential& pot, double r, double lo, double hi,
                                 const QuadratureOptions& o) {
  const auto pts = split_points(pot, std::max(r, lo), lo, hi);
  std::size_t refine = 1;
  double coarse = trapezoid_pass(pot, r, pts, o.initial_step, refine);
  double previous = std::numeric_limits<double>::quiet_NaN();
  for (int i = 0; i < o.max_refinements; ++i) {
    refine *= 2;
    const double fine = trapezoid_pass(pot, r, pts, o.initial_step, refine);
    const double value = (4.0 * fine - coarse) / 3.0;
    if (std::abs(value - previous) <= o.stability * std::abs(value)) return value;
    previous = value;
    coarse = fine;
  }
  throw QuadratureError("explosion-time quadrature did not converge under step refinement");
}

// u int_a^b K_qs dx on a quasi-steady stretch.
inline double steady_segment(const SmoothDrift& d, double u, double a, double b) {
  boost::math::quadrature::tanh_sinh<double> integrator;
  return u * integrator.integrate([&](double x) { return quasi_steady(d, u, x); }, a, b);
}

}  // namespace detail

// t(r) from the double integral: trapezoid grid up to the point X where the
// drift becomes steep, quasi-steady expansion beyond. The left margin is
// doubled until the value is stable.
inline double mean_explosion_quadrature(const DriftPotential& pot, double r, double truncation = 8.0,
                                        QuadratureOptions options = {}) {
  if (!std::isfinite(r)) throw ParameterError("start point must be finite");
  if (!(truncation > 0.0)) throw ParameterError("truncation must be positive");
  if (!(pot.lambda > 0.0)) throw ParameterError("lambda must be positive for a finite explosion time");
  const double u = 2.0 / (pot.c_n * pot.c_n);
  const auto right = detail::right_drift(pot);
  const auto left = detail::left_drift(pot);
  double X = pot.delta + 0.5;
  while (u * right.b0(X) < options.steep_rate) X += 0.25;
  if (r >= X) return u * [&] {
    boost::math::quadrature::exp_sinh<double> integrator;
    return integrator.integrate([&](double t) { return detail::quasi_steady(right, u, r + t); });
  }();

  double anchor = -pot.delta - 0.5;
  try {
    anchor = std::min(anchor, critical_points(pot).a_n - 0.5);
  } catch (const AsymptoticRegimeError&) {
  }
  // Left end of the grid: where the drift is steep again, at most `truncation` below the well.
  double steep = anchor;
  while (u * left.b0(steep) < options.steep_rate) steep -= 0.25;
  const auto evaluate = [&](double margin) {
    const double lo = std::max(steep, anchor - margin);
    const double head = r < lo ? detail::steady_segment(left, u, r, lo) : 0.0;
    return head + detail::refined_quadrature(pot, r, lo, X, options);
  };
  double margin = truncation;
  double previous = evaluate(margin);
  for (int k = 0; k < options.max_doublings; ++k) {
    margin *= 2.0;
    const double value = evaluate(margin);
    if (!std::isfinite(value)) break;
    if (std::abs(value - previous) <= 10.0 * options.stability * std::abs(value)) return value;
    previous = value;
  }
  throw QuadratureError("explosion-time quadrature did not stabilise under truncation doubling");
}

// Large-C_n limit (1/lambda) int_r^inf sech.
inline double limit_mean(double lambda, double r) {
  if (!(lambda > 0.0)) throw ParameterError("lambda must be positive");
  return (kPi - 2.0 * std::atan(std::exp(r))) / lambda;
}

inline double laplace_limit(double xi) {
  if (!(xi >= 0.0)) throw ParameterError("xi must be non-negative");
  return 1.0 / (1.0 + xi);
}

// Explosion times of one or many runs plus the parameters that produced them.
struct ExplosionRecord {
  DriftPotential potential;
  double start = 0.0;
  std::vector<double> times;
};

struct ExplosionSweepRow {
  double c_n = 0.0;
  double lambda = 0.0;
  double r = 0.0;
  double mean_time = 0.0;
  double limit_value = 0.0;
};

inline std::vector<ExplosionSweepRow> explosion_sweep(std::span<const double> c_values,
                                                      std::span<const double> lambdas,
                                                      std::span<const double> starts, double delta, double epsilon,
                                                      double truncation = 8.0) {
  std::vector<ExplosionSweepRow> rows;
  for (double c : c_values) {
    for (double lam : lambdas) {
      const DriftPotential pot(c, lam, delta, epsilon);
      for (double r : starts) {
        rows.push_back({c, lam, r, mean_explosion_quadrature(pot, r, truncation), limit_mean(lam, r)});
      }
    }
  }
  return rows;
}

inline void write_sweep_csv(std::ostream& out, std::span<const ExplosionSweepRow> rows) {
  out << "C_n,lambda,r,mean_time,limit_value\n";
  for (const auto& row : rows) {
    out << row.c_n << ',' << row.lambda << ',' << row.r << ',' << row.mean_time << ',' << row.limit_value << '\n';
  }
}

inline void write_explosions_csv(std::ostream& out, std::span<const SdePath> runs) {
  out << "run,explosion_index,time\n";
  for (std::size_t i = 0; i < runs.size(); ++i) {
    for (std::size_t k = 0; k < runs[i].explosions.size(); ++k) {
      out << i << ',' << k << ',' << runs[i].explosions[k] << '\n';
    }
  }
}

}  // namespace prufer_lab
