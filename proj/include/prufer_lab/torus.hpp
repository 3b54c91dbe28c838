#pragma once

// Random potential a(t) F(X_t): the flat torus [0, 2pi)^d, a finite Fourier
// series F, Brownian motion X_t on the torus, and the resolvent constants
// that parameterise the limiting diffusions.

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "prufer_lab/error.hpp"
#include "prufer_lab/rng.hpp"

namespace prufer_lab {

using Complex = std::complex<double>;

enum class DecayProfile {
  kPowerDecay,        // a(t) = (1 + t^2)^(-alpha/2)
  kConstantCoupling,  // a(t) = coupling, e.g. L^(-alpha) for the decaying-coupling model
};

struct FourierMode {
  std::vector<int> k;
  Complex c;
};

struct PotentialSpec {
  double alpha = 0.3;
  int dim = 1;
  std::vector<FourierMode> fourier;
  DecayProfile profile = DecayProfile::kPowerDecay;
  double coupling = 1.0;
  // Generator of X_t is generator_scale * Laplacian. 0.5 is standard Brownian motion.
  double generator_scale = 0.5;
};

namespace detail {

inline int squared_norm(const std::vector<int>& k) {
  int s = 0;
  for (int v : k) s += v * v;
  return s;
}

inline std::vector<int> negated(const std::vector<int>& k) {
  std::vector<int> out(k.size());
  for (std::size_t i = 0; i < k.size(); ++i) out[i] = -k[i];
  return out;
}

}  // namespace detail

// Throws ParameterError unless F is real, mean-zero and finitely supported on
// a torus of the declared dimension.
inline void validate(const PotentialSpec& spec) {
  if (spec.dim < 1) throw ParameterError("torus dimension must be >= 1");
  if (!(spec.generator_scale > 0.0)) throw ParameterError("generator_scale must be positive");
  if (!std::isfinite(spec.alpha)) throw ParameterError("alpha must be finite");
  if (spec.profile == DecayProfile::kConstantCoupling && !std::isfinite(spec.coupling)) {
    throw ParameterError("coupling must be finite");
  }
  const auto& modes = spec.fourier;
  for (std::size_t i = 0; i < modes.size(); ++i) {
    const auto& m = modes[i];
    if (static_cast<int>(m.k.size()) != spec.dim) {
      throw ParameterError("Fourier wave vector has wrong dimension");
    }
    if (!std::isfinite(m.c.real()) || !std::isfinite(m.c.imag())) {
      throw ParameterError("Fourier coefficient is not finite");
    }
    if (detail::squared_norm(m.k) == 0 && std::abs(m.c) != 0.0) {
      throw ParameterError("F must have zero mean (c_0 = 0)");
    }
    for (std::size_t j = i + 1; j < modes.size(); ++j) {
      if (modes[j].k == m.k) throw ParameterError("duplicate Fourier wave vector");
    }
    const auto minus_k = detail::negated(m.k);
    bool found = false;
    for (const auto& other : modes) {
      if (other.k == minus_k) {
        const Complex diff = other.c - std::conj(m.c);
        if (std::abs(diff) > 1e-12 * (1.0 + std::abs(m.c))) {
          throw ParameterError("F must be real: c_{-k} = conj(c_k) violated");
        }
        found = true;
        break;
      }
    }
    if (!found && std::abs(m.c) != 0.0) {
      throw ParameterError("F must be real: missing Hermitian partner for a Fourier mode");
    }
  }
}

// F(x) = 2 cos(x_1) on the one-dimensional torus.
inline PotentialSpec default_potential(double alpha = 0.3) {
  PotentialSpec spec;
  spec.alpha = alpha;
  spec.dim = 1;
  spec.fourier = {{{1}, Complex(1.0, 0.0)}, {{-1}, Complex(1.0, 0.0)}};
  return spec;
}

inline double eval_f(const PotentialSpec& spec, std::span<const double> x) {
  double total = 0.0;
  for (const auto& m : spec.fourier) {
    double phase = 0.0;
    for (std::size_t i = 0; i < m.k.size(); ++i) phase += m.k[i] * x[i];
    total += m.c.real() * std::cos(phase) - m.c.imag() * std::sin(phase);
  }
  return total;
}

inline double eval_a(const PotentialSpec& spec, double t) {
  if (spec.profile == DecayProfile::kConstantCoupling) return spec.coupling;
  return std::pow(1.0 + t * t, -0.5 * spec.alpha);
}

// One discretised Brownian path on the torus together with F sampled along it.
// Immutable after construction; freely shared across threads.
struct NoisePath {
  double dt = 0.0;
  std::size_t steps = 0;
  int dim = 1;
  std::vector<double> positions;  // (steps + 1) * dim, row-major
  std::vector<double> f_values;   // steps + 1
  SeedKey seed;

  double horizon() const noexcept { return dt * static_cast<double>(steps); }
  std::span<const double> position(std::size_t j) const {
    return {positions.data() + j * static_cast<std::size_t>(dim), static_cast<std::size_t>(dim)};
  }
};

// Brownian motion started from the uniform (stationary) law. Each coordinate
// increment is N(0, 2 * generator_scale * dt), i.e. variance dt for the
// standard 1/2 Laplacian generator.
inline NoisePath sample_path(const PotentialSpec& spec, double horizon, double dt, SeedKey seed) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ParameterError("dt must be positive");
  if (!(horizon > 0.0) || !std::isfinite(horizon)) throw ParameterError("horizon must be positive");
  validate(spec);
  const double ratio = horizon / dt;
  const auto steps = static_cast<std::size_t>(std::llround(ratio));
  if (steps == 0 || ratio < 1.0 - 1e-9) throw ParameterError("dt exceeds the horizon");

  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  NoisePath path;
  path.dt = dt;
  path.steps = steps;
  path.dim = spec.dim;
  path.seed = seed;
  const auto d = static_cast<std::size_t>(spec.dim);
  path.positions.resize((steps + 1) * d);
  path.f_values.resize(steps + 1);

  Engine engine = make_engine(seed, Stream::kPath);
  std::uniform_real_distribution<double> uniform(0.0, kTwoPi);
  std::normal_distribution<double> normal(0.0, std::sqrt(2.0 * spec.generator_scale * dt));

  for (std::size_t i = 0; i < d; ++i) path.positions[i] = uniform(engine);
  path.f_values[0] = eval_f(spec, path.position(0));
  for (std::size_t j = 1; j <= steps; ++j) {
    const double* prev = path.positions.data() + (j - 1) * d;
    double* cur = path.positions.data() + j * d;
    for (std::size_t i = 0; i < d; ++i) {
      double x = std::fmod(prev[i] + normal(engine), kTwoPi);
      if (x < 0.0) x += kTwoPi;
      if (x >= kTwoPi) x = 0.0;
      cur[i] = x;
    }
    path.f_values[j] = eval_f(spec, path.position(j));
  }
  return path;
}

inline void write_path_csv(std::ostream& out, const NoisePath& path) {
  out << "t";
  for (int i = 1; i <= path.dim; ++i) out << ",x_" << i;
  out << ",F\n";
  for (std::size_t j = 0; j <= path.steps; ++j) {
    out << static_cast<double>(j) * path.dt;
    for (double x : path.position(j)) out << ',' << x;
    out << ',' << path.f_values[j] << '\n';
  }
}

// Coefficients of (L + 2 i kappa)^{-1} F: g_k = c_k / (-s |k|^2 + 2 i kappa)
// with s the generator scale.
inline std::vector<FourierMode> resolvent_coeffs(const PotentialSpec& spec, double kappa) {
  if (kappa == 0.0) throw SingularResolventError("resolvent (L + 2i kappa)^{-1} is singular at kappa = 0");
  std::vector<FourierMode> out;
  out.reserve(spec.fourier.size());
  for (const auto& m : spec.fourier) {
    const double k2 = detail::squared_norm(m.k);
    const Complex denom(-spec.generator_scale * k2, 2.0 * kappa);
    out.push_back({m.k, m.c / denom});
  }
  return out;
}

struct SpectralConstants {
  double e0 = 0.0;
  double kappa0 = 0.0;
  std::vector<FourierMode> resolvent;
  double c_e0 = 0.0;      // C(E0) = <grad g, grad conj(g)>
  double beta_e0 = 0.0;   // 8 E0 / C(E0)
  double psi_mean = 0.0;  // -2 Re <F g>
};

inline SpectralConstants compute_constants(const PotentialSpec& spec, double e0) {
  if (!(e0 > 0.0) || !std::isfinite(e0)) throw ParameterError("reference energy e0 must be positive");
  validate(spec);
  SpectralConstants out;
  out.e0 = e0;
  out.kappa0 = std::sqrt(e0);
  out.resolvent = resolvent_coeffs(spec, out.kappa0);

  const double s = spec.generator_scale;
  double c = 0.0;
  for (const auto& m : spec.fourier) {
    const double k2 = detail::squared_norm(m.k);
    c += k2 * std::norm(m.c) / (s * s * k2 * k2 + 4.0 * e0);
  }
  if (!(c > 0.0)) throw DegeneratePotentialError("F has no nonzero Fourier mode: C(E0) = 0");

  // <F g> = sum_k c_{-k} g_k = sum_k conj(c_k) g_k for real F.
  Complex fg(0.0, 0.0);
  for (std::size_t i = 0; i < spec.fourier.size(); ++i) {
    fg += std::conj(spec.fourier[i].c) * out.resolvent[i].c;
  }
  out.c_e0 = c;
  out.beta_e0 = 8.0 * e0 / c;
  out.psi_mean = -2.0 * fg.real();
  return out;
}

}  // namespace prufer_lab
