// prufer-lab <mode> --config <path> [--seed N] [--runs M] [--threads K] [--out DIR]
//
// Exit codes: 0 all enabled checks pass, 1 numerical or acceptance failure
// (including a realization skip rate above the tolerance), 2 usage or
// configuration error.

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "prufer_lab/config.hpp"
#include "prufer_lab/experiments.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace prufer_lab;

namespace {

constexpr int kExitPass = 0;
constexpr int kExitFail = 1;
constexpr int kExitUsage = 2;

struct Run {
  ExperimentConfig config;
  unsigned threads = 1;
  fs::path out;
  bool dump = false;
  json echo;
  json checks = json::array();
  bool failed = false;

  std::ofstream open_csv(const std::string& name) const {
    std::ofstream f(out / name);
    if (!f) throw Error("cannot write " + (out / name).string());
    f << std::setprecision(12);
    f << "# config: " << echo.dump() << '\n';
    return f;
  }

  void check(const TestReport& r) {
    checks.push_back(r.to_json());
    checks.back().erase("config_echo");
    if (config.checks && (!r.pass || r.degenerate)) failed = true;
  }

  template <class T>
  void skips(const Ensemble<T>& e, json& summary) {
    summary["realizations"] = e.outcomes.size();
    summary["skipped"] = e.skipped();
    json errors = json::array();
    for (std::size_t i = 0; i < e.outcomes.size(); ++i) {
      if (!e.outcomes[i].value) errors.push_back({{"run", i}, {"error", e.outcomes[i].error}});
    }
    summary["skipped_runs"] = errors;
    if (e.skip_rate() > config.tol.skip_rate) failed = true;
  }

  void write_summary(json summary) const {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::ostringstream ts;
    ts << std::put_time(std::gmtime(&now), "%Y-%m-%dT%H:%M:%SZ");
    summary["mode"] = mode_name(config.mode);
    summary["timestamp"] = ts.str();
    summary["config"] = echo;
    summary["checks"] = checks;
    summary["pass"] = !failed;
    std::ofstream f(out / "summary.json");
    f << summary.dump(2) << '\n';
    std::size_t bad = 0;
    for (const auto& c : checks) bad += c.value("pass", false) ? 0 : 1;
    std::cout << mode_name(config.mode) << ": " << (failed ? "FAIL" : "PASS");
    if (!checks.empty()) std::cout << " (" << checks.size() - bad << '/' << checks.size() << " checks passed)";
    std::cout << ", outputs in " << out.string() << '\n';
    for (const auto& c : checks) {
      if (!c.value("pass", false)) std::cout << "  failed: " << c.value("test", std::string("?")) << '\n';
    }
  }
};

std::vector<double> count_column(const std::vector<std::vector<double>>& sets, double lo, double hi) {
  std::vector<double> out;
  for (const auto& s : sets) {
    out.push_back(static_cast<double>(std::count_if(s.begin(), s.end(), [&](double x) { return x > lo && x <= hi; })));
  }
  return out;
}

void run_spectrum(Run& run) {
  const auto& c = run.config;
  const auto e = operator_ensemble(c.potential, c.op, c.runs, c.seed, run.threads);
  auto csv = run.open_csv("atoms.csv");
  csv << "seed,atom_index,atom_value\n";
  std::vector<std::vector<double>> atoms;
  for (const auto* v : e.values()) {
    SpectrumResult r;
    r.atoms = v->atoms;
    write_atoms_csv(csv, v->index, r);
    atoms.push_back(v->atoms);
  }
  json summary;
  run.skips(e, summary);
  const Window w = c.op.window;
  const int cells = std::max(1, static_cast<int>(std::lround(w.width() / kPi)));
  json cell_counts = json::array();
  for (int k = 0; k < cells; ++k) {
    const double lo = w.lo + w.width() * k / cells;
    const double hi = w.lo + w.width() * (k + 1) / cells;
    const auto col = count_column(atoms, lo, hi);
    const auto s = summarize_counts(col);
    cell_counts.push_back({{"lo", lo}, {"hi", hi}, {"mean", s.mean}, {"variance", s.variance}});
  }
  summary["cells"] = cell_counts;
  const auto totals = count_column(atoms, w.lo, w.hi);
  const double expected = w.width() / kPi;
  if (!totals.empty()) {
    const auto s = summarize_counts(totals);
    summary["mean_count"] = s.mean;
    summary["dispersion"] = std::isfinite(s.dispersion) ? json(s.dispersion) : json(nullptr);
    run.check(detail::check_report("mean_count", s.mean, "window/pi +- " + detail::fmt(c.tol.mean_rel),
                                   std::abs(s.mean - expected) <= c.tol.mean_rel * expected, totals.size()));
    if (totals.size() > 1) run.check(poisson_dispersion(totals, expected, {c.tol.dispersion_lo, c.tol.dispersion_hi}));
  }
  const auto gaps = pooled_gaps(atoms);
  if (!gaps.empty()) run.check(ks_exponential(gaps, 1.0 / kPi, c.tol.significance));
  const auto edges = uniform_grid(w.lo, w.hi, cells);
  auto hist = empirical_intensity(atoms, edges, [](double lo, double hi) { return (hi - lo) / kPi; });
  auto hcsv = run.open_csv("intensity.csv");
  write_histogram_csv(hcsv, hist);
  run.write_summary(summary);
}

void run_phase(Run& run) {
  const auto& c = run.config;
  const auto e = operator_ensemble(c.potential, c.op, c.runs, c.seed, run.threads, true);
  auto csv = run.open_csv("phases.csv");
  csv << "run,lambda,theta_L,phi\n";
  auto jcsv = run.open_csv("jumps.csv");
  jcsv << "run,lambda,level,time\n";
  std::vector<double> phi;
  std::vector<std::vector<double>> theta(c.op.lambdas.size());
  for (const auto* v : e.values()) {
    phi.push_back(v->phi);
    for (std::size_t k = 0; k < c.op.lambdas.size(); ++k) {
      csv << v->index << ',' << c.op.lambdas[k] << ',' << v->big_theta[k] << ',' << v->phi << '\n';
      theta[k].push_back(v->big_theta[k]);
      for (const auto& j : v->jumps[k]) jcsv << v->index << ',' << c.op.lambdas[k] << ',' << j.level << ',' << j.time << '\n';
    }
  }
  json summary;
  run.skips(e, summary);
  if (!phi.empty()) run.check(uniformity_test(phi, c.tol.significance));
  json means = json::array();
  for (std::size_t k = 0; k < theta.size(); ++k) {
    if (theta[k].empty()) continue;
    const auto s = summarize_counts(theta[k]);
    const double lam = c.op.lambdas[k];
    means.push_back({{"lambda", lam}, {"mean_theta", s.mean}, {"variance", s.variance}});
    if (lam != 0.0) {
      run.check(detail::check_report("mean_theta_lambda_" + detail::fmt(lam), s.mean,
                                     detail::fmt(lam) + " +- " + detail::fmt(c.tol.mean_rel),
                                     std::abs(s.mean - lam) <= c.tol.mean_rel * std::abs(lam), theta[k].size()));
    }
  }
  summary["theta_means"] = means;
  if (run.dump) {
    const auto path = sample_path(c.potential, c.op.L, c.op.dt, {c.seed, 0});
    auto pcsv = run.open_csv("noise_path_0.csv");
    write_path_csv(pcsv, path);
    auto tcsv = run.open_csv("trajectory_0.csv");
    write_trajectory_csv(tcsv, integrate_phase(path, c.potential, std::sqrt(c.op.e0), 0.0, PhaseOptions{c.op.substeps}));
  }
  run.write_summary(summary);
}

void run_jump_field(Run& run) {
  const auto& c = run.config;
  const auto e = jump_field_ensemble(c.potential, c.op, c.runs, c.seed, run.threads);
  const auto tb = static_cast<std::size_t>(c.op.t_bins);
  const auto lb = static_cast<std::size_t>(c.op.lambda_bins);
  auto csv = run.open_csv("rectangles.csv");
  csv << "run,t_bin,lambda_bin,count\n";
  auto ecsv = run.open_csv("events.csv");
  ecsv << "run,t,lambda_index,level\n";
  std::vector<std::vector<double>> col(tb * lb);
  std::size_t r = 0;
  for (std::size_t i = 0; i < e.outcomes.size(); ++i) {
    const auto& o = e.outcomes[i];
    if (!o.value) continue;
    for (std::size_t k = 0; k < col.size(); ++k) {
      csv << i << ',' << k / lb << ',' << k % lb << ',' << o.value->counts[k] << '\n';
      col[k].push_back(o.value->counts[k]);
    }
    for (const auto& ev : o.value->events) ecsv << i << ',' << ev.t << ',' << ev.lambda_index << ',' << ev.level << '\n';
    ++r;
  }
  json summary;
  run.skips(e, summary);
  const double target = (1.0 / c.op.t_bins) * (c.op.lambda_max / c.op.lambda_bins) / kPi;
  json cells = json::array();
  double sum_mean = 0.0;
  double sum_var = 0.0;
  double worst_rel = 0.0;
  for (std::size_t k = 0; k < col.size() && r > 1; ++k) {
    const auto s = summarize_counts(col[k]);
    cells.push_back({{"t_bin", k / lb}, {"lambda_bin", k % lb}, {"mean", s.mean}, {"variance", s.variance}});
    sum_mean += s.mean;
    sum_var += s.variance;
    worst_rel = std::max(worst_rel, std::abs(s.mean - target) / target);
  }
  summary["target_mean"] = target;
  summary["cells"] = cells;
  if (r > 1) {
    run.check(detail::check_report("worst_rectangle_mean_rel_error", worst_rel, "<= 0.15", worst_rel <= 0.15, r));
    const double pooled = sum_mean > 0.0 ? sum_var / sum_mean : NAN;
    run.check(detail::check_report("pooled_dispersion", pooled, "in dispersion band",
                                   pooled >= c.tol.dispersion_lo && pooled <= c.tol.dispersion_hi, r));
    double worst_rho = 0.0;
    for (std::size_t i = 0; i < col.size(); ++i) {
      for (std::size_t j = i + 1; j < col.size(); ++j) {
        const double rho = pearson(col[i], col[j]);
        if (std::isfinite(rho)) worst_rho = std::max(worst_rho, std::abs(rho));
      }
    }
    run.check(detail::check_report("max_abs_pair_correlation", worst_rho, "< 0.15", worst_rho < 0.15, r));
  }
  run.write_summary(summary);
}

void run_sine_beta(Run& run) {
  const auto& c = run.config;
  auto opts = c.sde.sine;
  const auto e = sine_beta_ensemble(c.sde.beta, c.sde.lambdas, opts, c.runs, c.seed, run.threads);
  auto csv = run.open_csv("counts.csv");
  csv << "run,lambda_lo,lambda_hi,count\n";
  const std::size_t cells = c.sde.lambdas.size() > 0 ? c.sde.lambdas.size() - 1 : 0;
  std::vector<std::vector<double>> col(cells);
  std::size_t off_lattice = 0;
  for (const auto* v : e.values()) {
    if (v->far_from_lattice) ++off_lattice;
  }
  for (std::size_t i = 0; i < e.outcomes.size(); ++i) {
    const auto& o = e.outcomes[i];
    if (!o.value) continue;
    for (std::size_t k = 0; k < cells; ++k) {
      csv << i << ',' << c.sde.lambdas[k] << ',' << c.sde.lambdas[k + 1] << ',' << o.value->counts[k] << '\n';
      col[k].push_back(static_cast<double>(o.value->counts[k]));
    }
  }
  json summary;
  run.skips(e, summary);
  summary["off_lattice_runs"] = off_lattice;
  if (off_lattice > 0.05 * static_cast<double>(e.outcomes.size())) {
    summary["warning"] = "horizon too short: more than 5% of terminal phases lie farther than 0.5 from 2 pi Z";
  }
  json cj = json::array();
  for (std::size_t k = 0; k < cells; ++k) {
    if (col[k].empty()) continue;
    const auto s = summarize_counts(col[k]);
    const double expected = (c.sde.lambdas[k + 1] - c.sde.lambdas[k]) / (2.0 * kPi);
    cj.push_back({{"lambda_lo", c.sde.lambdas[k]}, {"lambda_hi", c.sde.lambdas[k + 1]}, {"mean", s.mean},
                  {"expected", expected},
                  {"dispersion", std::isfinite(s.dispersion) ? json(s.dispersion) : json(nullptr)}});
    run.check(detail::check_report("mean_count_" + std::to_string(k), s.mean, "width/(2 pi) +- mean_rel",
                                   std::abs(s.mean - expected) <= c.tol.mean_rel * expected, col[k].size()));
    if (col[k].size() > 1) run.check(poisson_dispersion(col[k], expected, {c.tol.dispersion_lo, c.tol.dispersion_hi}));
  }
  summary["cells"] = cj;
  if (run.dump && !e.outcomes.empty()) {
    auto d = opts;
    d.record_every = c.sde.dump_stride;
    const auto one = simulate_sine_beta(c.sde.beta, c.sde.lambdas, d, {c.seed, 0});
    for (std::size_t k = 0; k < one.paths.size(); ++k) {
      auto p = run.open_csv("path_0_lambda_" + std::to_string(k) + ".csv");
      write_path_csv(p, one.paths[k]);
    }
  }
  run.write_summary(summary);
}

void run_relative_sde(Run& run) {
  const auto& c = run.config;
  const auto& sde = c.sde.relative;
  const auto e = relative_sde_ensemble(sde, c.sde.lambdas, c.runs, c.seed, run.threads);
  auto csv = run.open_csv("jumps.csv");
  csv << "run,lambda,level,time\n";
  for (std::size_t i = 0; i < e.outcomes.size(); ++i) {
    const auto& o = e.outcomes[i];
    if (!o.value) continue;
    for (std::size_t k = 0; k < c.sde.lambdas.size(); ++k) {
      for (const auto& j : o.value->jumps[k]) csv << i << ',' << c.sde.lambdas[k] << ',' << j.level << ',' << j.time << '\n';
    }
  }
  json summary;
  run.skips(e, summary);
  const double gamma = 1.0 / (1.0 - 2.0 * sde.alpha);
  json hists = json::array();
  for (std::size_t k = 0; k < c.sde.lambdas.size(); ++k) {
    Ensemble<RelativePhaseSdeResult> one;
    for (const auto& o : e.outcomes) {
      Outcome<RelativePhaseSdeResult> x;
      if (o.value) {
        RelativePhaseSdeResult r;
        r.jumps = {o.value->jumps[k]};
        x.value = std::move(r);
      }
      one.outcomes.push_back(std::move(x));
    }
    const auto h = marginal_intensity(one, c.sde.lambdas[k], gamma, 8);
    auto hcsv = run.open_csv("intensity_lambda_" + std::to_string(k) + ".csv");
    write_histogram_csv(hcsv, h);
    hists.push_back({{"lambda", c.sde.lambdas[k]}, {"max_abs_z", h.max_abs_z()}, {"rate", h.rate},
                     {"target", h.target}, {"std_error", h.std_error}});
    if (h.realizations > 1) {
      run.check(detail::check_report("intensity_max_abs_z_lambda_" + std::to_string(k), h.max_abs_z(), "<= 2",
                                     h.max_abs_z() <= 2.0, h.realizations));
    }
  }
  summary["intensity"] = hists;
  if (run.dump) {
    auto d = sde;
    d.record_every = c.sde.dump_stride;
    const auto one = simulate_relative_phase(d, c.sde.lambdas, {c.seed, 0});
    for (std::size_t k = 0; k < one.paths.size(); ++k) {
      auto p = run.open_csv("path_0_lambda_" + std::to_string(k) + ".csv");
      write_path_csv(p, one.paths[k]);
    }
  }
  run.write_summary(summary);
}

void run_limit_sde(Run& run) {
  const auto& c = run.config;
  if (c.sde.kind == SdeMode::kSineBeta) return run_sine_beta(run);
  if (c.sde.kind == SdeMode::kRelativePhase) return run_relative_sde(run);
  SdeKind kind = SdeKind::kRiccati;
  if (c.sde.kind == SdeMode::kStationaryPlus) kind = SdeKind::kStationaryPlus;
  if (c.sde.kind == SdeMode::kStationaryMinus) kind = SdeKind::kStationaryMinus;
  const auto e = explosion_ensemble(c.sde.base, kind, c.sde.time_power, c.sde.horizon, c.sde.stop_after_explosions,
                                    c.runs, c.seed, run.threads);
  std::vector<SdePath> paths;
  for (const auto* v : e.values()) paths.push_back(*v);
  auto csv = run.open_csv("explosions.csv");
  write_explosions_csv(csv, paths);
  json summary;
  run.skips(e, summary);
  std::vector<double> first;
  std::size_t censored = 0;
  for (const auto& p : paths) {
    if (p.explosions.empty()) {
      ++censored;
    } else {
      first.push_back(p.explosions.front());
    }
  }
  summary["censored_runs"] = censored;
  if (!first.empty()) {
    const auto s = summarize_counts(first);
    summary["mean_first_explosion"] = s.mean;
    const double se = first.size() > 1 ? std::sqrt(s.variance / static_cast<double>(first.size())) : NAN;
    summary["std_error"] = std::isfinite(se) ? json(se) : json(nullptr);
    const double lam = c.sde.base.lambda;
    if (kind != SdeKind::kRiccati && lam > 0.0) {
      const double quad = mean_explosion_quadrature(DriftPotential::from_config(c.sde.base, kind == SdeKind::kStationaryPlus ? 1 : -1),
                                                    c.sde.base.start(), c.explosion.truncation);
      summary["quadrature_mean"] = quad;
      if (std::isfinite(se) && se > 0.0) {
        const double z = (s.mean - quad) / se;
        run.check(detail::check_report("mc_mean_vs_quadrature_z", z, "|z| <= 3", std::abs(z) <= 3.0, first.size()));
      }
      run.check(detail::check_report("censored_runs", static_cast<double>(censored), "0", censored == 0));
    }
    if (lam > 0.0 && first.size() > 1) {
      json laplace = json::array();
      for (double xi : {0.5, 1.0, 2.0}) {
        std::vector<double> lt;
        for (double t : first) lt.push_back(std::exp(-xi * t * lam / kPi));
        const auto ls = summarize_counts(lt);
        laplace.push_back({{"xi", xi}, {"empirical", ls.mean}, {"limit", laplace_limit(xi)},
                           {"std_error", std::sqrt(ls.variance / static_cast<double>(lt.size()))}});
      }
      summary["laplace"] = laplace;
      auto ks = ks_exponential(first, lam / kPi, c.tol.significance);
      ks.test = "ks_exponential_first_explosion";
      summary["ks_exponential"] = ks.to_json();
      summary["ks_exponential"].erase("config_echo");
    }
  }
  if (run.dump) {
    auto d = c.sde.base;
    d.seed = {c.seed, 0};
    d.record_every = c.sde.dump_stride;
    const SdeKind k[1] = {kind};
    const auto one = simulate_coupled(std::span<const SdeKind>(k), d,
                                      {c.sde.time_power, c.sde.horizon, c.sde.stop_after_explosions});
    auto p = run.open_csv("path_0.csv");
    write_path_csv(p, one.front());
  }
  run.write_summary(summary);
}

void run_explosion(Run& run) {
  const auto& x = run.config.explosion;
  const auto rows = explosion_sweep(x.c_values, x.lambdas, x.starts, x.delta, x.epsilon, x.truncation);
  auto csv = run.open_csv("sweep.csv");
  write_sweep_csv(csv, rows);
  json summary;
  json table = json::array();
  for (const auto& r : rows) {
    table.push_back({{"C_n", r.c_n}, {"lambda", r.lambda}, {"r", r.r}, {"mean_time", r.mean_time},
                     {"limit_value", r.limit_value}, {"pi_over_lambda", kPi / r.lambda}});
  }
  summary["sweep"] = table;
  run.write_summary(summary);
}

int run_report(Run& run) {
  AcceptanceContext ctx;
  ctx.seed = run.config.seed;
  ctx.threads = run.threads;
  ctx.scale = run.config.report_scale;
  ctx.tol = run.config.tol;
  json criteria = json::array();
  std::ostringstream table;
  for (int id : run.config.criteria) {
    CriterionResult r;
    try {
      r = run_criterion(id, ctx);
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      r.id = id;
      r.name = "criterion " + std::to_string(id);
      r.summary = std::string("error: ") + e.what();
    }
    std::cout << pass_line(r) << std::endl;
    table << pass_line(r) << '\n';
    criteria.push_back(r.to_json());
    if (!r.pass) run.failed = true;
  }
  std::ofstream(run.out / "report.txt") << table.str();
  json summary;
  summary["criteria"] = criteria;
  run.write_summary(summary);
  return run.failed ? kExitFail : kExitPass;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Random decaying-potential Schroedinger operators: spectra, phases, limit diffusions"};
  std::string mode;
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> runs;
  unsigned threads = 0;
  std::optional<std::string> out;
  bool dump = false;
  app.add_option("mode", mode, "spectrum | jump-field | limit-sde | sine-beta | explosion | phase | report")
      ->required();
  app.add_option("--config", config_path, "TOML experiment file")->required();
  app.add_option("--seed", seed, "Master seed");
  app.add_option("--runs", runs, "Number of realizations")->check(CLI::PositiveNumber);
  app.add_option("--threads", threads, "Workers (default: PRUFER_LAB_THREADS, then hardware)");
  app.add_option("--out", out, "Output directory");
  app.add_flag("--dump", dump, "Also write debug dumps of the first realization");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitPass : kExitUsage;
  }

  Run run;
  try {
    run.config = load_config(config_path);
    run.config.mode = parse_mode(mode);
    if (seed) run.config.seed = *seed;
    if (runs) run.config.runs = *runs;
    if (threads) run.config.threads = threads;
    if (out) run.config.out = *out;
    validate(run.config);
    require_tables(run.config);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitUsage;
  }
  run.threads = resolve_threads(run.config.threads);
  run.out = run.config.out;
  run.dump = dump;
  run.echo = to_json(run.config);

  try {
    fs::create_directories(run.out);
    switch (run.config.mode) {
      case Mode::kSpectrum: run_spectrum(run); break;
      case Mode::kPhase: run_phase(run); break;
      case Mode::kJumpField: run_jump_field(run); break;
      case Mode::kLimitSde: run_limit_sde(run); break;
      case Mode::kSineBeta: run_sine_beta(run); break;
      case Mode::kExplosion: run_explosion(run); break;
      case Mode::kReport: return run_report(run);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFail;
  }
  return run.failed ? kExitFail : kExitPass;
}
