#pragma once

// Goodness-of-fit tests and path functionals used to check the Poisson limit.
// Every function is a pure function of its input; the permutation test draws
// from its own seeded stream.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/poisson.hpp>
#include <json.hpp>

#include "prufer_lab/error.hpp"
#include "prufer_lab/limit_sde.hpp"
#include "prufer_lab/prufer.hpp"
#include "prufer_lab/rng.hpp"

namespace prufer_lab {

struct TestReport {
  std::string test;
  double statistic = 0.0;
  std::optional<double> p_value;
  std::size_t n = 0;
  std::string target;
  bool pass = false;
  bool degenerate = false;
  // Secondary numbers (dispersion index, resultant length, ...).
  std::vector<std::pair<std::string, double>> extras;

  double extra(const std::string& key) const {
    for (const auto& [k, v] : extras) {
      if (k == key) return v;
    }
    return std::numeric_limits<double>::quiet_NaN();
  }

  nlohmann::json to_json(const nlohmann::json& config_echo = nlohmann::json::object()) const {
    nlohmann::json j;
    j["test"] = test;
    j["statistic"] = std::isfinite(statistic) ? nlohmann::json(statistic) : nlohmann::json(nullptr);
    j["p_value"] = p_value ? nlohmann::json(*p_value) : nlohmann::json(nullptr);
    j["n"] = n;
    j["target"] = target;
    j["pass"] = pass;
    if (degenerate) j["degenerate"] = true;
    for (const auto& [k, v] : extras) j[k] = std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
    j["config_echo"] = config_echo;
    return j;
  }
};

// Survival function of the Kolmogorov distribution, P(K > x).
inline double kolmogorov_q(double x) {
  if (!(x > 0.0)) return 1.0;
  if (x < 1.18) {
    // Small-argument theta series for the CDF.
    const double w = kPi * kPi / (8.0 * x * x);
    double cdf = 0.0;
    for (int k = 1; k <= 50; ++k) {
      const double term = std::exp(-(2.0 * k - 1.0) * (2.0 * k - 1.0) * w);
      cdf += term;
      if (term < 1e-18) break;
    }
    cdf *= std::sqrt(2.0 * kPi) / x;
    return std::clamp(1.0 - cdf, 0.0, 1.0);
  }
  double q = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * x * x);
    q += (k % 2 == 1 ? 2.0 : -2.0) * term;
    if (term < 1e-18) break;
  }
  return std::clamp(q, 0.0, 1.0);
}

// Two-sided one-sample KS statistic against a continuous CDF.
inline double ks_statistic(std::span<const double> samples, const std::function<double(double)>& cdf) {
  std::vector<double> x(samples.begin(), samples.end());
  std::sort(x.begin(), x.end());
  const auto m = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = cdf(x[i]);
    d = std::max({d, f - static_cast<double>(i) / m, static_cast<double>(i + 1) / m - f});
  }
  return d;
}

inline TestReport ks_exponential(std::span<const double> samples, double rate, double significance = 0.01) {
  if (samples.empty()) throw SampleError("ks_exponential needs at least one sample");
  if (!(rate > 0.0)) throw ParameterError("rate must be positive");
  for (double s : samples) {
    if (!(s > 0.0) || !std::isfinite(s)) throw SampleError("exponential samples must be positive and finite");
  }
  TestReport r;
  r.test = "ks_exponential";
  r.n = samples.size();
  r.statistic = ks_statistic(samples, [rate](double x) { return -std::expm1(-rate * x); });
  r.p_value = kolmogorov_q(std::sqrt(static_cast<double>(r.n)) * r.statistic);
  r.target = "Exp(rate " + std::to_string(rate) + ")";
  r.pass = *r.p_value > significance;
  return r;
}

struct CountSummary {
  double mean = 0.0;
  double variance = 0.0;  // unbiased
  double dispersion = std::numeric_limits<double>::quiet_NaN();
};

inline CountSummary summarize_counts(std::span<const double> counts) {
  CountSummary s;
  const auto m = static_cast<double>(counts.size());
  s.mean = std::accumulate(counts.begin(), counts.end(), 0.0) / m;
  double ss = 0.0;
  for (double c : counts) ss += (c - s.mean) * (c - s.mean);
  s.variance = counts.size() > 1 ? ss / (m - 1.0) : 0.0;
  if (s.mean != 0.0) s.dispersion = s.variance / s.mean;
  return s;
}

struct DispersionBand {
  double lo = 0.8;
  double hi = 1.2;
};

// Index of dispersion plus a chi-square comparison of the count histogram with
// Poisson(expected_mean); cells are merged until each expects at least 5.
inline TestReport poisson_dispersion(std::span<const double> counts, double expected_mean,
                                     DispersionBand band = {}) {
  if (counts.empty()) throw SampleError("poisson_dispersion needs at least one count");
  TestReport r;
  r.test = "poisson_dispersion";
  r.n = counts.size();
  r.target = "Poisson(" + std::to_string(expected_mean) + "), dispersion in [" + std::to_string(band.lo) + ", " +
             std::to_string(band.hi) + "]";
  const auto s = summarize_counts(counts);
  r.extras = {{"mean", s.mean}, {"variance", s.variance}};
  if (s.mean == 0.0) {
    r.statistic = s.variance == 0.0 ? std::numeric_limits<double>::quiet_NaN()
                                    : std::numeric_limits<double>::infinity();
    r.degenerate = true;
    return r;
  }
  r.statistic = s.dispersion;
  r.pass = s.dispersion >= band.lo && s.dispersion <= band.hi;

  if (expected_mean > 0.0) {
    boost::math::poisson_distribution<double> pois(expected_mean);
    const auto total = static_cast<double>(counts.size());
    std::vector<double> observed;
    std::vector<double> expected;
    double obs_acc = 0.0;
    double exp_acc = 0.0;
    double mass = 0.0;
    long k = 0;
    const auto kmax = static_cast<long>(*std::max_element(counts.begin(), counts.end()));
    for (;; ++k) {
      const double pk = boost::math::pdf(pois, static_cast<double>(k));
      mass += pk;
      exp_acc += pk * total;
      obs_acc += static_cast<double>(std::count_if(counts.begin(), counts.end(), [k](double c) {
        return std::lround(c) == k;
      }));
      const double rest = (1.0 - mass) * total;
      if (exp_acc >= 5.0 && rest >= 5.0) {
        observed.push_back(obs_acc);
        expected.push_back(exp_acc);
        obs_acc = exp_acc = 0.0;
      }
      if (rest < 5.0 && k >= kmax) break;
      if (k > 10000) break;
    }
    // Everything above k (and any negative counts) goes into the last cell.
    const double tail_obs = static_cast<double>(std::count_if(counts.begin(), counts.end(), [k](double c) {
      return std::lround(c) > k || std::lround(c) < 0;
    }));
    obs_acc += tail_obs;
    exp_acc += (1.0 - mass) * total;
    if (!observed.empty()) {
      observed.back() += obs_acc;
      expected.back() += exp_acc;
    } else {
      observed.push_back(obs_acc);
      expected.push_back(exp_acc);
    }
    if (observed.size() >= 2) {
      double chi2 = 0.0;
      for (std::size_t i = 0; i < observed.size(); ++i) {
        chi2 += (observed[i] - expected[i]) * (observed[i] - expected[i]) / expected[i];
      }
      boost::math::chi_squared_distribution<double> dist(static_cast<double>(observed.size() - 1));
      r.p_value = boost::math::cdf(boost::math::complement(dist, chi2));
      r.extras.push_back({"chi_square", chi2});
      r.extras.push_back({"chi_square_cells", static_cast<double>(observed.size())});
    }
  }
  return r;
}

// KS against Uniform[0, pi); also the mean resultant length of e^{2i phi}.
inline TestReport uniformity_test(std::span<const double> phases, double significance = 0.01) {
  if (phases.empty()) throw SampleError("uniformity_test needs at least one phase");
  double c = 0.0;
  double s = 0.0;
  for (double p : phases) {
    if (!(p >= 0.0 && p < kPi)) throw SampleError("phase outside [0, pi)");
    c += std::cos(2.0 * p);
    s += std::sin(2.0 * p);
  }
  TestReport r;
  r.test = "uniformity_ks";
  r.n = phases.size();
  r.statistic = ks_statistic(phases, [](double x) { return std::clamp(x / kPi, 0.0, 1.0); });
  r.p_value = kolmogorov_q(std::sqrt(static_cast<double>(r.n)) * r.statistic);
  r.target = "Uniform[0, pi)";
  r.pass = *r.p_value > significance;
  r.extras = {{"resultant_length", std::hypot(c, s) / static_cast<double>(r.n)}};
  return r;
}

inline double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DimensionError("pearson: columns differ in length");
  const auto m = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / m;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / m;
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return sxy / std::sqrt(sxx * syy);
}

// Pearson correlation of paired counts with a two-sided permutation p-value.
inline TestReport independence_test(std::span<const double> x, std::span<const double> y, SeedKey seed = {},
                                    std::size_t shuffles = 10000, double significance = 0.01) {
  if (x.size() != y.size()) throw DimensionError("independence_test: columns differ in length");
  if (x.size() < 2) throw SampleError("independence_test needs at least two pairs");
  TestReport r;
  r.test = "independence_permutation";
  r.n = x.size();
  r.target = "zero correlation";
  r.statistic = pearson(x, y);
  if (!std::isfinite(r.statistic)) {
    r.degenerate = true;
    return r;
  }
  Engine engine = make_engine(seed, Stream::kPermutation);
  std::vector<double> shuffled(y.begin(), y.end());
  std::size_t extreme = 0;
  for (std::size_t s = 0; s < shuffles; ++s) {
    std::shuffle(shuffled.begin(), shuffled.end(), engine);
    if (std::abs(pearson(x, shuffled)) >= std::abs(r.statistic) - 1e-15) ++extreme;
  }
  r.p_value = (1.0 + static_cast<double>(extreme)) / (1.0 + static_cast<double>(shuffles));
  r.pass = *r.p_value > significance;
  return r;
}

// Fraction of the first set's jump times having a partner in the second set
// within tau. Vacuously 1 for an empty first set.
inline double nesting_measure(std::span<const double> jumps, std::span<const double> partners, double tau) {
  if (jumps.empty()) return 1.0;
  std::vector<double> p(partners.begin(), partners.end());
  std::sort(p.begin(), p.end());
  std::size_t hit = 0;
  for (double t : jumps) {
    const auto it = std::lower_bound(p.begin(), p.end(), t - tau);
    if (it != p.end() && *it <= t + tau) ++hit;
  }
  return static_cast<double>(hit) / static_cast<double>(jumps.size());
}

namespace detail {

inline void check_path(const SdePath& p) {
  if (p.times.size() != p.values.size()) throw DimensionError("path times and values differ in length");
}

inline double path_span(const SdePath& p) { return p.times.size() < 2 ? 0.0 : p.times.back() - p.times.front(); }

}  // namespace detail

// Ensemble average of the fraction of time with {Theta}_pi >= threshold
// (left-point rule on the recorded grid).
inline double time_above_threshold(std::span<const SdePath> paths, double threshold) {
  if (!(threshold > 0.0 && threshold < kPi)) throw ParameterError("threshold must lie in (0, pi)");
  if (paths.empty()) return 0.0;
  double total = 0.0;
  for (const auto& p : paths) {
    detail::check_path(p);
    const double span = detail::path_span(p);
    if (span <= 0.0) continue;
    double above = 0.0;
    for (std::size_t k = 0; k + 1 < p.times.size(); ++k) {
      if (fractional(p.values[k]) >= threshold) above += p.times[k + 1] - p.times[k];
    }
    total += above / span;
  }
  return total / static_cast<double>(paths.size());
}

// Ensemble average of the fraction of time with {Theta(lambda')}_pi <= {Theta(lambda)}_pi.
inline double order_violation_measure(std::span<const SdePath> lower, std::span<const SdePath> upper) {
  if (lower.size() != upper.size()) throw DimensionError("order_violation_measure: ensembles differ in size");
  if (lower.empty()) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < lower.size(); ++i) {
    const auto& a = lower[i];
    const auto& b = upper[i];
    detail::check_path(a);
    detail::check_path(b);
    if (a.times != b.times) throw DimensionError("order_violation_measure: paths on different grids");
    const double span = detail::path_span(a);
    if (span <= 0.0) continue;
    double bad = 0.0;
    for (std::size_t k = 0; k + 1 < a.times.size(); ++k) {
      if (fractional(b.values[k]) <= fractional(a.values[k])) bad += a.times[k + 1] - a.times[k];
    }
    total += bad / span;
  }
  return total / static_cast<double>(lower.size());
}

struct IntensityHistogram {
  std::vector<double> edges;
  std::vector<double> rate;      // mean atoms per realization per unit length
  std::vector<double> std_error; // from the per-realization spread
  std::vector<double> target;    // bin average of the target density (empty if none)
  std::size_t realizations = 0;

  // Largest |rate - target| / std_error over bins (infinite if a bin has zero error but misses).
  double max_abs_z() const {
    double z = 0.0;
    for (std::size_t i = 0; i < rate.size() && i < target.size(); ++i) {
      const double diff = std::abs(rate[i] - target[i]);
      if (std_error[i] > 0.0) {
        z = std::max(z, diff / std_error[i]);
      } else if (diff > 1e-12) {
        z = std::numeric_limits<double>::infinity();
      }
    }
    return z;
  }
};

// Binned atom rate over realizations. The target density, if given, is
// averaged over each bin from its integral.
inline IntensityHistogram empirical_intensity(std::span<const std::vector<double>> realizations,
                                              std::span<const double> edges,
                                              const std::function<double(double, double)>& target_integral = {}) {
  if (edges.size() < 2) throw ParameterError("need at least one bin");
  for (std::size_t i = 1; i < edges.size(); ++i) {
    if (!(edges[i] > edges[i - 1])) throw ParameterError("bin edges must increase");
  }
  const std::size_t bins = edges.size() - 1;
  IntensityHistogram h;
  h.edges.assign(edges.begin(), edges.end());
  h.rate.assign(bins, 0.0);
  h.std_error.assign(bins, 0.0);
  h.realizations = realizations.size();
  std::vector<double> sum(bins, 0.0);
  std::vector<double> sum2(bins, 0.0);
  std::vector<double> counts(bins);
  for (const auto& atoms : realizations) {
    std::fill(counts.begin(), counts.end(), 0.0);
    for (double a : atoms) {
      if (a < edges.front() || a > edges.back()) continue;
      auto it = std::upper_bound(edges.begin(), edges.end(), a);
      std::size_t b = it == edges.begin() ? 0 : static_cast<std::size_t>(it - edges.begin()) - 1;
      if (b >= bins) b = bins - 1;
      counts[b] += 1.0;
    }
    for (std::size_t b = 0; b < bins; ++b) {
      sum[b] += counts[b];
      sum2[b] += counts[b] * counts[b];
    }
  }
  const auto m = static_cast<double>(realizations.size());
  for (std::size_t b = 0; b < bins; ++b) {
    const double width = edges[b + 1] - edges[b];
    if (m > 0.0) {
      const double mean = sum[b] / m;
      h.rate[b] = mean / width;
      if (m > 1.0) {
        const double var = std::max(0.0, (sum2[b] - m * mean * mean) / (m - 1.0));
        h.std_error[b] = std::sqrt(var / m) / width;
      }
    }
    if (target_integral) h.target.push_back(target_integral(edges[b], edges[b + 1]) / width);
  }
  return h;
}

inline void write_histogram_csv(std::ostream& out, const IntensityHistogram& h) {
  out << "bin_lo,bin_hi,rate,std_error,target\n";
  for (std::size_t b = 0; b < h.rate.size(); ++b) {
    out << h.edges[b] << ',' << h.edges[b + 1] << ',' << h.rate[b] << ',' << h.std_error[b] << ',';
    if (b < h.target.size()) out << h.target[b];
    out << '\n';
  }
}

// Consecutive spacings of every realization, pooled.
inline std::vector<double> pooled_gaps(std::span<const std::vector<double>> realizations) {
  std::vector<double> gaps;
  for (const auto& atoms : realizations) {
    for (std::size_t i = 1; i < atoms.size(); ++i) gaps.push_back(atoms[i] - atoms[i - 1]);
  }
  return gaps;
}

}  // namespace prufer_lab
