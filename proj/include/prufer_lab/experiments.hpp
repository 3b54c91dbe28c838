#pragma once

// Monte Carlo ensembles over seeded realizations and the acceptance suite
// built on them. Realization i always draws from SeedKey{master, i}, and
// reductions run in index order, so results do not depend on worker count.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <json.hpp>

#include "prufer_lab/config.hpp"
#include "prufer_lab/explosion.hpp"
#include "prufer_lab/limit_sde.hpp"
#include "prufer_lab/parallel.hpp"
#include "prufer_lab/prufer.hpp"
#include "prufer_lab/spectrum.hpp"
#include "prufer_lab/stats.hpp"
#include "prufer_lab/torus.hpp"

namespace prufer_lab {

// Ensembles ----------------------------------------------------------------

template <class T>
struct Ensemble {
  std::vector<Outcome<T>> outcomes;

  std::size_t skipped() const {
    return static_cast<std::size_t>(std::count_if(outcomes.begin(), outcomes.end(),
                                                  [](const auto& o) { return !o.value; }));
  }
  double skip_rate() const {
    return outcomes.empty() ? 0.0 : static_cast<double>(skipped()) / static_cast<double>(outcomes.size());
  }
  // Successful realizations in index order.
  std::vector<const T*> values() const {
    std::vector<const T*> out;
    for (const auto& o : outcomes) {
      if (o.value) out.push_back(&*o.value);
    }
    return out;
  }
};

struct OperatorRealization {
  std::uint64_t index = 0;
  std::vector<double> atoms;
  double phi = 0.0;
  std::vector<double> big_theta;  // terminal Theta_L(lambda) per configured lambda
  std::vector<std::vector<Jump>> jumps;
};

// One path per realization: eigenvalues in the window, boundary phase and
// relative phases at the configured lambdas.
inline Ensemble<OperatorRealization> operator_ensemble(const PotentialSpec& spec, const OperatorConfig& op,
                                                       std::size_t runs, std::uint64_t master, unsigned threads,
                                                       bool with_jumps = false) {
  SpectrumOptions so;
  so.points_per_level = op.points_per_level;
  so.phase.substeps = op.substeps;
  Ensemble<OperatorRealization> e;
  e.outcomes = parallel_map(runs, threads, [&](std::size_t i) {
    const auto path = sample_path(spec, op.L, op.dt, {master, i});
    OperatorRealization r;
    r.index = i;
    r.atoms = solve_window(path, spec, op.L, op.e0, op.window, so).atoms;
    const auto rel = relative_phases(path, spec, op.e0, op.lambdas, op.L, so.phase);
    r.phi = rel.empty() ? fractional(integrate_phase(path, spec, std::sqrt(op.e0), 0.0, so.phase).thetas.back())
                        : rel.front().phi;
    for (const auto& p : rel) {
      r.big_theta.push_back(p.big_theta.back());
      if (with_jumps) r.jumps.push_back(jump_times(p, 0.05 * op.L).jumps);
    }
    return r;
  });
  return e;
}

struct FieldRealization {
  std::vector<double> counts;  // rectangle counts, t-major: counts[ti * lambda_bins + li]
  std::vector<JumpEvent> events;
};

inline std::vector<double> uniform_grid(double lo, double hi, int bins) {
  std::vector<double> g(static_cast<std::size_t>(bins) + 1);
  for (int i = 0; i <= bins; ++i) g[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / bins;
  return g;
}

inline Ensemble<FieldRealization> jump_field_ensemble(const PotentialSpec& spec, const OperatorConfig& op,
                                                      std::size_t runs, std::uint64_t master, unsigned threads) {
  const auto lg = uniform_grid(0.0, op.lambda_max, op.lambda_bins);
  const auto tg = uniform_grid(0.0, 1.0, op.t_bins);
  Ensemble<FieldRealization> e;
  e.outcomes = parallel_map(runs, threads, [&](std::size_t i) {
    const auto path = sample_path(spec, op.n, op.field_dt, {master, i});
    const auto f = jump_field(path, spec, op.e0, op.n, lg, tg, PhaseOptions{op.substeps});
    FieldRealization r;
    for (std::size_t a = 0; a + 1 < tg.size(); ++a) {
      for (std::size_t b = 0; b + 1 < lg.size(); ++b) r.counts.push_back(static_cast<double>(f.rectangle_count(a, a + 1, b, b + 1)));
    }
    r.events = f.events;
    return r;
  });
  return e;
}

// First explosion time of S_+ or S_- (or the Riccati process) per run.
inline Ensemble<SdePath> explosion_ensemble(SdeConfig base, SdeKind kind, TimePower power, double horizon,
                                            std::size_t stop_after, std::size_t runs, std::uint64_t master,
                                            unsigned threads) {
  Ensemble<SdePath> e;
  e.outcomes = parallel_map(runs, threads, [&](std::size_t i) {
    SdeConfig c = base;
    c.seed = {master, i};
    const SdeKind k[1] = {kind};
    return std::move(simulate_coupled(std::span<const SdeKind>(k), c, {power, horizon, stop_after}).front());
  });
  return e;
}

inline Ensemble<SineBetaResult> sine_beta_ensemble(double beta, const std::vector<double>& lambdas,
                                                   SineBetaOptions options, std::size_t runs, std::uint64_t master,
                                                   unsigned threads) {
  Ensemble<SineBetaResult> e;
  e.outcomes = parallel_map(runs, threads,
                            [&](std::size_t i) { return simulate_sine_beta(beta, lambdas, options, {master, i}); });
  return e;
}

inline Ensemble<RelativePhaseSdeResult> relative_sde_ensemble(const RelativePhaseSde& sde,
                                                              const std::vector<double>& lambdas, std::size_t runs,
                                                              std::uint64_t master, unsigned threads) {
  Ensemble<RelativePhaseSdeResult> e;
  e.outcomes = parallel_map(runs, threads,
                            [&](std::size_t i) { return simulate_relative_phase(sde, lambdas, {master, i}); });
  return e;
}

// Independent eigenvalue count: second-order finite differences on the
// sampled grid, Sturm sequence of the tridiagonal matrix (negative pivots of
// the LDL^T factorisation of H - E).
inline long fd_count_below(const NoisePath& path, const PotentialSpec& spec, double L, double energy) {
  const std::size_t n = detail::steps_for_horizon(path, L);
  if (n < 2) throw ParameterError("grid too coarse for a finite-difference count");
  const double h = path.dt;
  const double off = 1.0 / (h * h);
  long negatives = 0;
  double d = 0.0;
  for (std::size_t j = 1; j < n; ++j) {
    const double t = h * static_cast<double>(j);
    const double diag = 2.0 * off + eval_a(spec, t) * path.f_values[j] - energy;
    d = j == 1 ? diag : diag - off * off / d;
    if (d == 0.0) d = -1e-300;
    if (d < 0.0) ++negatives;
  }
  return negatives;
}

// Acceptance suite ---------------------------------------------------------

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  std::vector<TestReport> reports;
  std::string summary;
  double seconds = 0.0;

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["criterion"] = id;
    j["name"] = name;
    j["pass"] = pass;
    j["summary"] = summary;
    j["checks"] = nlohmann::json::array();
    for (const auto& r : reports) {
      auto rj = r.to_json();
      rj.erase("config_echo");
      j["checks"].push_back(rj);
    }
    return j;
  }
};

struct AcceptanceContext {
  std::uint64_t seed = 20240601;
  unsigned threads = 1;
  double scale = 1.0;  // multiplies ensemble sizes
  Tolerances tol;

  std::size_t runs(std::size_t nominal) const {
    return std::max<std::size_t>(2, static_cast<std::size_t>(std::llround(scale * static_cast<double>(nominal))));
  }

  // Operator ensembles are shared between criteria 1, 2, 3 and 9.
  const Ensemble<OperatorRealization>& operator_runs(double alpha) {
    auto it = cache_.find(alpha);
    if (it != cache_.end()) return it->second;
    OperatorConfig op;
    op.L = 400.0;
    op.dt = 0.004;
    op.e0 = 1.0;
    op.window = {0.0, 8.0 * kPi};
    op.lambdas = {kPi, 2.0 * kPi};
    return cache_.emplace(alpha, operator_ensemble(default_potential(alpha), op, runs(200), seed, threads))
        .first->second;
  }

 private:
  std::map<double, Ensemble<OperatorRealization>> cache_;
};

namespace detail {

inline CriterionResult new_result(int id, std::string name) {
  CriterionResult r;
  r.id = id;
  r.name = std::move(name);
  return r;
}

inline TestReport check_report(std::string test, double statistic, std::string target, bool pass,
                               std::size_t n = 0) {
  TestReport r;
  r.test = std::move(test);
  r.statistic = statistic;
  r.target = std::move(target);
  r.pass = pass;
  r.n = n;
  return r;
}

inline std::string fmt(double v, int precision = 4) {
  std::ostringstream s;
  s.precision(precision);
  s << v;
  return s.str();
}

inline bool all_pass(const std::vector<TestReport>& reports) {
  return !reports.empty() &&
         std::all_of(reports.begin(), reports.end(), [](const TestReport& r) { return r.pass && !r.degenerate; });
}

inline TestReport skip_report(std::size_t skipped, std::size_t total, double limit) {
  const double rate = total == 0 ? 0.0 : static_cast<double>(skipped) / static_cast<double>(total);
  return check_report("skip_rate", rate, "<= " + fmt(limit), rate <= limit, total);
}

}  // namespace detail

// Poisson statistics of the rescaled eigenvalues in [0, 8 pi].
inline CriterionResult criterion_poisson(AcceptanceContext& ctx) {
  auto c = detail::new_result(1, "eigenvalue Poisson limit (alpha = 0.3)");
  const auto& e = ctx.operator_runs(0.3);
  const auto vals = e.values();
  std::vector<double> counts;
  std::vector<std::vector<double>> atoms;
  for (const auto* v : vals) {
    counts.push_back(static_cast<double>(v->atoms.size()));
    atoms.push_back(v->atoms);
  }
  const double expected = 8.0;
  const auto s = summarize_counts(counts);
  c.reports.push_back(detail::check_report("mean_count", s.mean, "8 +- 10%",
                                           std::abs(s.mean - expected) <= 0.1 * expected, counts.size()));
  c.reports.push_back(poisson_dispersion(counts, expected, {ctx.tol.dispersion_lo, ctx.tol.dispersion_hi}));
  const auto gaps = pooled_gaps(atoms);
  c.reports.push_back(ks_exponential(gaps, 1.0 / kPi, ctx.tol.significance));
  c.reports.push_back(detail::skip_report(e.skipped(), e.outcomes.size(), ctx.tol.skip_rate));
  c.summary = "mean " + detail::fmt(s.mean) + ", dispersion " + detail::fmt(s.dispersion) + ", gap KS p " +
              detail::fmt(c.reports[2].p_value.value_or(NAN));
  c.pass = detail::all_pass(c.reports);
  return c;
}

inline CriterionResult criterion_uniform_phase(AcceptanceContext& ctx) {
  auto c = detail::new_result(2, "boundary phase uniform on [0, pi)");
  const auto& e = ctx.operator_runs(0.3);
  std::vector<double> phi;
  for (const auto* v : e.values()) phi.push_back(v->phi);
  c.reports.push_back(uniformity_test(phi, ctx.tol.significance));
  c.summary = "KS p " + detail::fmt(c.reports[0].p_value.value_or(NAN)) + ", resultant length " +
              detail::fmt(c.reports[0].extra("resultant_length"));
  c.pass = detail::all_pass(c.reports);
  return c;
}

inline CriterionResult criterion_theta_mean(AcceptanceContext& ctx) {
  auto c = detail::new_result(3, "relative phase mean drift");
  const auto& e = ctx.operator_runs(0.3);
  const double lambdas[2] = {kPi, 2.0 * kPi};
  for (std::size_t k = 0; k < 2; ++k) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto* v : e.values()) {
      sum += v->big_theta[k];
      ++n;
    }
    const double mean = n ? sum / static_cast<double>(n) : NAN;
    c.reports.push_back(detail::check_report("mean_theta_lambda_" + detail::fmt(lambdas[k] / kPi) + "pi", mean,
                                             detail::fmt(lambdas[k]) + " +- 10%",
                                             std::abs(mean - lambdas[k]) <= 0.1 * lambdas[k], n));
    c.summary += (k ? ", " : "") + std::string("E Theta(") + detail::fmt(lambdas[k] / kPi) + "pi)/lambda = " +
                 detail::fmt(mean / lambdas[k]);
  }
  c.pass = detail::all_pass(c.reports);
  return c;
}

inline CriterionResult criterion_jump_field(AcceptanceContext& ctx) {
  auto c = detail::new_result(4, "2D jump field Poisson on [0,1] x [0, 4 pi]");
  OperatorConfig op;
  op.n = 1000.0;
  op.field_dt = 0.005;
  op.lambda_max = 4.0 * kPi;
  op.t_bins = 4;
  op.lambda_bins = 4;
  const auto e = jump_field_ensemble(default_potential(0.3), op, ctx.runs(1000), ctx.seed + 4, ctx.threads);
  const auto vals = e.values();
  const std::size_t cells = 16;
  std::vector<std::vector<double>> col(cells);
  for (const auto* v : vals) {
    for (std::size_t k = 0; k < cells; ++k) col[k].push_back(v->counts[k]);
  }
  const double target = 0.25 * kPi / kPi;
  double worst_rel = 0.0;
  double sum_mean = 0.0;
  double sum_var = 0.0;
  for (const auto& x : col) {
    const auto s = summarize_counts(x);
    worst_rel = std::max(worst_rel, std::abs(s.mean - target) / target);
    sum_mean += s.mean;
    sum_var += s.variance;
  }
  c.reports.push_back(detail::check_report("worst_rectangle_mean_rel_error", worst_rel, "<= 0.15", worst_rel <= 0.15,
                                           vals.size()));
  const double pooled = sum_mean > 0.0 ? sum_var / sum_mean : NAN;
  c.reports.push_back(detail::check_report("pooled_dispersion", pooled,
                                           "[" + detail::fmt(ctx.tol.dispersion_lo) + ", " +
                                               detail::fmt(ctx.tol.dispersion_hi) + "]",
                                           pooled >= ctx.tol.dispersion_lo && pooled <= ctx.tol.dispersion_hi,
                                           vals.size()));
  double worst_rho = 0.0;
  for (std::size_t i = 0; i < cells; ++i) {
    for (std::size_t j = i + 1; j < cells; ++j) {
      const double rho = pearson(col[i], col[j]);
      if (std::isfinite(rho)) worst_rho = std::max(worst_rho, std::abs(rho));
    }
  }
  c.reports.push_back(detail::check_report("max_abs_pair_correlation", worst_rho, "< 0.15", worst_rho < 0.15,
                                           vals.size()));
  c.reports.push_back(detail::skip_report(e.skipped(), e.outcomes.size(), ctx.tol.skip_rate));
  c.summary = "worst mean error " + detail::fmt(worst_rel) + ", pooled dispersion " + detail::fmt(pooled) +
              ", max |rho| " + detail::fmt(worst_rho);
  c.pass = detail::all_pass(c.reports);
  return c;
}

// Jump times of the reduced relative-phase SDE in s = t^{1/gamma}.
inline IntensityHistogram marginal_intensity(const Ensemble<RelativePhaseSdeResult>& e, double lambda, double gamma,
                                             int bins) {
  std::vector<std::vector<double>> s_times;
  for (const auto* v : e.values()) {
    std::vector<double> s;
    for (const auto& j : v->jumps.front()) s.push_back(std::pow(j.time, 1.0 / gamma));
    s_times.push_back(std::move(s));
  }
  const auto edges = uniform_grid(0.0, 1.0, bins);
  auto h = empirical_intensity(s_times, edges, [&](double lo, double hi) {
    return lambda / kPi * (std::pow(hi, gamma) - std::pow(lo, gamma));
  });
  // A bin with no spread (typically no jump at all) gets the Poisson error of the target.
  for (std::size_t b = 0; b < h.rate.size(); ++b) {
    if (h.std_error[b] == 0.0 && h.realizations > 0) {
      const double width = h.edges[b + 1] - h.edges[b];
      h.std_error[b] = std::sqrt(h.target[b] * width / static_cast<double>(h.realizations)) / width;
    }
  }
  return h;
}

inline CriterionResult criterion_marginal(AcceptanceContext& ctx) {
  auto c = detail::new_result(5, "reduced SDE jump intensity in s = t^(1/gamma)");
  RelativePhaseSde sde;
  sde.alpha = 0.3;
  sde.n = 1e4;
  sde.dt = 1e-6;
  const double gamma = 1.0 / (1.0 - 2.0 * sde.alpha);
  const std::vector<double> lambdas{kPi};
  const auto e = relative_sde_ensemble(sde, lambdas, ctx.runs(500), ctx.seed + 5, ctx.threads);
  const auto h = marginal_intensity(e, kPi, gamma, 8);
  std::size_t bad = 0;
  for (std::size_t b = 0; b < h.rate.size(); ++b) {
    const double z = std::abs(h.rate[b] - h.target[b]) / h.std_error[b];
    const bool ok = z <= 2.0;
    if (!ok) ++bad;
    auto r = detail::check_report("bin_" + std::to_string(b) + "_z", z, "|z| <= 2", ok, h.realizations);
    r.extras = {{"rate", h.rate[b]}, {"target", h.target[b]}, {"std_error", h.std_error[b]}};
    c.reports.push_back(r);
  }
  c.reports.push_back(detail::skip_report(e.skipped(), e.outcomes.size(), ctx.tol.skip_rate));
  c.summary = std::to_string(bad) + " of 8 bins outside 2 SE, max |z| " + detail::fmt(h.max_abs_z());
  c.pass = detail::all_pass(c.reports);
  return c;
}

inline CriterionResult criterion_explosion(AcceptanceContext& ctx) {
  auto c = detail::new_result(6, "explosion time: quadrature, pi/lambda limit, exponential law");
  SdeConfig base;
  base.c_n = 20.0;
  base.lambda = kPi;
  base.delta = 0.01;
  base.epsilon = 0.01;
  base.dt = 5e-5;
  base.r_cap = 15.0;
  const auto e = explosion_ensemble(base, SdeKind::kStationaryPlus, TimePower::kUniform, 200.0, 1, ctx.runs(2000),
                                    ctx.seed + 6, ctx.threads);
  std::vector<double> tau;
  std::size_t censored = 0;
  for (const auto* v : e.values()) {
    if (v->explosions.empty()) {
      ++censored;
    } else {
      tau.push_back(v->explosions.front());
    }
  }
  const auto s = summarize_counts(tau);
  const double se = std::sqrt(s.variance / static_cast<double>(tau.size()));
  const double quad = mean_explosion_quadrature(DriftPotential::from_config(base), base.start());
  const double z_mean = (s.mean - quad) / se;
  c.reports.push_back(detail::check_report("mc_mean_vs_quadrature_z", z_mean, "|z| <= 3 (quadrature " +
                                           detail::fmt(quad, 8) + ")", std::abs(z_mean) <= 3.0, tau.size()));
  const double big = mean_explosion_quadrature(DriftPotential(50.0, kPi, 0.0, 0.0), -8.0);
  const double rel = std::abs(big - 1.0) / 1.0;
  c.reports.push_back(detail::check_report("quadrature_C50_r-8_rel_error", rel, "<= 0.05 of pi/lambda", rel <= 0.05));
  for (double xi : {0.5, 1.0, 2.0}) {
    std::vector<double> lt;
    for (double t : tau) lt.push_back(std::exp(-xi * t * base.lambda / kPi));
    const auto ls = summarize_counts(lt);
    const double z = (ls.mean - laplace_limit(xi)) / std::sqrt(ls.variance / static_cast<double>(lt.size()));
    c.reports.push_back(detail::check_report("laplace_xi_" + detail::fmt(xi) + "_z", z, "|z| <= 3",
                                             std::abs(z) <= 3.0, lt.size()));
  }
  c.reports.push_back(detail::check_report("censored_runs", static_cast<double>(censored), "0", censored == 0));
  c.reports.push_back(detail::skip_report(e.skipped(), e.outcomes.size(), ctx.tol.skip_rate));
  c.summary = "MC mean " + detail::fmt(s.mean, 5) + " +- " + detail::fmt(se, 2) + " vs quadrature " +
              detail::fmt(quad, 6) + "; C=50 quadrature " + detail::fmt(big, 6);
  c.pass = detail::all_pass(c.reports);
  return c;
}

inline CriterionResult criterion_sandwich(AcceptanceContext& ctx) {
  auto c = detail::new_result(7, "sandwich S- <= R <= S+ on shared noise");
  SdeConfig base;
  base.c_n = 20.0;
  base.delta = 0.01;
  base.epsilon = 0.01;
  base.dt = 1e-4;
  const auto out = parallel_map(50, ctx.threads, [&](std::size_t i) {
    SdeConfig cfg = base;
    cfg.seed = {ctx.seed + 7, i};
    return check_sandwich(cfg, 3.0, 1e-6);
  });
  std::size_t violations = 0;
  std::size_t points = 0;
  std::size_t failed = 0;
  double worst = std::numeric_limits<double>::infinity();
  for (const auto& o : out) {
    if (!o.value) {
      ++failed;
      continue;
    }
    violations += o.value->violations;
    points += o.value->grid_points;
    worst = std::min(worst, o.value->worst_gap);
  }
  c.reports.push_back(detail::check_report("order_violations", static_cast<double>(violations), "0 on 50 seeds",
                                           violations == 0 && failed == 0, out.size()));
  c.reports.back().extras = {{"grid_points", static_cast<double>(points)}, {"worst_gap", worst}};
  c.summary = std::to_string(violations) + " violations over " + std::to_string(points) + " grid points, worst gap " +
              detail::fmt(worst);
  c.pass = detail::all_pass(c.reports);
  return c;
}

inline CriterionResult criterion_sine_beta(AcceptanceContext& ctx) {
  auto c = detail::new_result(8, "Sine_beta counts at beta = 0.05");
  SineBetaOptions so;
  so.horizon = 600.0;
  so.dt = 0.01;
  const std::vector<double> lambdas{0.0, 8.0 * kPi};
  const auto e = sine_beta_ensemble(0.05, lambdas, so, ctx.runs(2000), ctx.seed + 8, ctx.threads);
  std::vector<double> counts;
  std::size_t off_lattice = 0;
  for (const auto* v : e.values()) {
    counts.push_back(static_cast<double>(v->counts.front()));
    if (v->far_from_lattice) ++off_lattice;
  }
  const auto s = summarize_counts(counts);
  c.reports.push_back(detail::check_report("mean_count", s.mean, "4 +- 10%", std::abs(s.mean - 4.0) <= 0.4,
                                           counts.size()));
  c.reports.push_back(poisson_dispersion(counts, 4.0, {ctx.tol.dispersion_lo, ctx.tol.dispersion_hi}));
  c.reports.back().extras.push_back({"off_lattice_runs", static_cast<double>(off_lattice)});
  c.reports.push_back(detail::skip_report(e.skipped(), e.outcomes.size(), ctx.tol.skip_rate));
  c.summary = "mean " + detail::fmt(s.mean) + ", dispersion " + detail::fmt(s.dispersion);
  c.pass = detail::all_pass(c.reports);
  return c;
}

inline CriterionResult criterion_regime(AcceptanceContext& ctx) {
  auto c = detail::new_result(9, "regime contrast: gap KS fails at alpha = 0.7, passes at 0.3");
  auto gaps_of = [&](double alpha) {
    std::vector<std::vector<double>> atoms;
    for (const auto* v : ctx.operator_runs(alpha).values()) atoms.push_back(v->atoms);
    return pooled_gaps(atoms);
  };
  const auto g7 = gaps_of(0.7);
  const auto g3 = gaps_of(0.3);
  auto r7 = ks_exponential(g7, 1.0 / kPi, ctx.tol.significance);
  auto r3 = ks_exponential(g3, 1.0 / kPi, ctx.tol.significance);
  double mean7 = 0.0;
  for (double g : g7) mean7 += g;
  mean7 /= static_cast<double>(std::max<std::size_t>(1, g7.size()));
  auto must_fail = detail::check_report("ks_exponential_alpha_0.7_rejects", r7.statistic,
                                        "p <= " + detail::fmt(ctx.tol.significance), !r7.pass, r7.n);
  must_fail.p_value = r7.p_value;
  must_fail.extras = {{"mean_gap", mean7}};
  r3.test = "ks_exponential_alpha_0.3_accepts";
  c.reports.push_back(must_fail);
  c.reports.push_back(r3);
  c.summary = "alpha 0.7 p " + detail::fmt(r7.p_value.value_or(NAN)) + " (mean gap " + detail::fmt(mean7) +
              "), alpha 0.3 p " + detail::fmt(r3.p_value.value_or(NAN));
  c.pass = detail::all_pass(c.reports);
  return c;
}

inline CriterionResult criterion_identities(AcceptanceContext& ctx) {
  auto c = detail::new_result(10, "exact identities and finite-difference oracle");
  // Resolvent identity on the default and on seeded random Hermitian coefficient maps.
  double worst_psi = 0.0;
  {
    Engine eng = make_engine({ctx.seed + 10, 0}, Stream::kSampling);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<PotentialSpec> specs{default_potential(0.3)};
    for (int trial = 0; trial < 10; ++trial) {
      PotentialSpec p = default_potential(0.3);
      p.fourier.clear();
      for (int k = 1; k <= 4; ++k) {
        const Complex z(u(eng), u(eng));
        p.fourier.push_back({{k}, z});
        p.fourier.push_back({{-k}, std::conj(z)});
      }
      specs.push_back(p);
    }
    for (const auto& p : specs) {
      for (double e0 : {0.25, 1.0, 3.0}) {
        const auto k = compute_constants(p, e0);
        worst_psi = std::max(worst_psi, std::abs(k.psi_mean - k.c_e0) / std::abs(k.c_e0));
      }
    }
  }
  c.reports.push_back(detail::check_report("psi_identity_rel_error", worst_psi, "<= 1e-12", worst_psi <= 1e-12));

  // Free Laplacian: kappa_j = j pi / L exactly.
  double worst_picket = 0.0;
  {
    PotentialSpec free = default_potential(0.3);
    free.profile = DecayProfile::kConstantCoupling;
    free.coupling = 0.0;
    const double L = 100.0;
    const auto path = sample_path(free, L, 0.01, {ctx.seed + 10, 1});
    const auto res = solve_window(path, free, L, 1.0, {0.0, 8.0 * kPi});
    std::vector<double> exact;
    for (long j = 1; j * kPi / L <= 1.0 + 8.0 * kPi / L + 1e-12; ++j) {
      const double atom = L * (static_cast<double>(j) * kPi / L - 1.0);
      if (atom > 0.0 && atom <= 8.0 * kPi) exact.push_back(atom);
    }
    if (exact.size() != res.atoms.size()) {
      worst_picket = std::numeric_limits<double>::infinity();
    } else {
      for (std::size_t i = 0; i < exact.size(); ++i) worst_picket = std::max(worst_picket, std::abs(exact[i] - res.atoms[i]));
    }
  }
  c.reports.push_back(detail::check_report("picket_fence_max_error", worst_picket, "<= 1e-8", worst_picket <= 1e-8));

  double worst_sech = 0.0;
  {
    boost::math::quadrature::exp_sinh<double> integrator;
    for (double lam : {0.5, kPi, 7.0}) {
      for (double r : {-6.0, -1.0, 0.0, 2.0, 5.0}) {
        const double q = integrator.integrate([&](double t) { return 1.0 / std::cosh(r + t); }) / lam;
        worst_sech = std::max(worst_sech, std::abs(q - limit_mean(lam, r)));
      }
    }
  }
  c.reports.push_back(detail::check_report("limit_mean_vs_sech_quadrature", worst_sech, "<= 1e-8", worst_sech <= 1e-8));

  const auto fd = parallel_map(20, ctx.threads, [&](std::size_t i) {
    const auto spec = default_potential(0.3);
    const double L = 50.0;
    const auto path = sample_path(spec, L, L / 2e5, {ctx.seed + 11, i});
    long worst = 0;
    for (double e : {0.5, 1.0, 2.0}) {
      worst = std::max(worst, std::abs(count_below(path, spec, L, e) - fd_count_below(path, spec, L, e)));
    }
    return worst;
  });
  long worst_fd = 0;
  bool fd_ok = true;
  for (const auto& o : fd) {
    if (!o.value) {
      fd_ok = false;
      continue;
    }
    worst_fd = std::max(worst_fd, *o.value);
  }
  c.reports.push_back(detail::check_report("fd_count_max_disagreement", static_cast<double>(worst_fd), "<= 1",
                                           fd_ok && worst_fd <= 1, fd.size()));
  c.summary = "psi " + detail::fmt(worst_psi, 2) + ", picket " + detail::fmt(worst_picket, 2) + ", sech " +
              detail::fmt(worst_sech, 2) + ", FD max diff " + std::to_string(worst_fd);
  c.pass = detail::all_pass(c.reports);
  return c;
}

struct TrendPoint {
  double n = 0.0;
  double threshold = 0.0;
  double time_above = 0.0;
  double order_violation = 0.0;
};

inline TrendPoint diagnostic_point(double n, double alpha, double dt, std::size_t runs, std::uint64_t master,
                                   unsigned threads) {
  RelativePhaseSde sde;
  sde.alpha = alpha;
  sde.n = n;
  sde.dt = dt;
  sde.record_every = 5;
  const double gamma = 1.0 / (1.0 - 2.0 * alpha);
  const auto e = relative_sde_ensemble(sde, {kPi, 2.0 * kPi}, runs, master, threads);
  std::vector<SdePath> lower;
  std::vector<SdePath> upper;
  for (const auto* v : e.values()) {
    lower.push_back(v->paths[0]);
    upper.push_back(v->paths[1]);
  }
  TrendPoint p;
  p.n = n;
  p.threshold = 2.0 * std::atan(std::pow(n, -1.0 / (4.0 * gamma)));
  p.time_above = time_above_threshold(lower, p.threshold);
  p.order_violation = order_violation_measure(lower, upper);
  return p;
}

inline CriterionResult criterion_trends(AcceptanceContext& ctx) {
  auto c = detail::new_result(11, "diagnostics decrease in n");
  std::vector<TrendPoint> pts;
  for (double n : {1e2, 1e3, 1e4}) pts.push_back(diagnostic_point(n, 0.3, 1e-5, ctx.runs(100), ctx.seed + 12, ctx.threads));
  bool above_ok = true;
  bool order_ok = true;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    above_ok = above_ok && pts[i].time_above < pts[i - 1].time_above;
    order_ok = order_ok && pts[i].order_violation < pts[i - 1].order_violation;
  }
  auto ra = detail::check_report("time_above_threshold_decreasing", pts.back().time_above, "strictly decreasing",
                                 above_ok);
  auto ro = detail::check_report("order_violation_decreasing", pts.back().order_violation, "strictly decreasing",
                                 order_ok);
  for (const auto& p : pts) {
    const std::string tag = "n_" + detail::fmt(p.n);
    ra.extras.push_back({tag, p.time_above});
    ro.extras.push_back({tag, p.order_violation});
  }
  c.reports = {ra, ro};
  for (const auto& p : pts) {
    c.summary += (c.summary.empty() ? "" : "; ") + std::string("n=") + detail::fmt(p.n) + ": " +
                 detail::fmt(p.time_above) + " / " + detail::fmt(p.order_violation);
  }
  c.pass = detail::all_pass(c.reports);
  return c;
}

inline CriterionResult run_criterion(int id, AcceptanceContext& ctx) {
  const auto start = std::chrono::steady_clock::now();
  CriterionResult r;
  switch (id) {
    case 1: r = criterion_poisson(ctx); break;
    case 2: r = criterion_uniform_phase(ctx); break;
    case 3: r = criterion_theta_mean(ctx); break;
    case 4: r = criterion_jump_field(ctx); break;
    case 5: r = criterion_marginal(ctx); break;
    case 6: r = criterion_explosion(ctx); break;
    case 7: r = criterion_sandwich(ctx); break;
    case 8: r = criterion_sine_beta(ctx); break;
    case 9: r = criterion_regime(ctx); break;
    case 10: r = criterion_identities(ctx); break;
    case 11: r = criterion_trends(ctx); break;
    default: throw ConfigError("no acceptance criterion " + std::to_string(id));
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

inline std::string pass_line(const CriterionResult& r) {
  std::ostringstream s;
  s << (r.pass ? "PASS" : "FAIL") << " criterion " << r.id << ": " << r.name << " | " << r.summary;
  return s.str();
}

}  // namespace prufer_lab
