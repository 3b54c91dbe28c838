#pragma once

// Experiment configuration read from TOML. Tables:
//   [experiment] mode, runs, seed, threads, out, checks
//   [potential]  alpha, dim, fourier = [[k..., re, im], ...], profile, coupling, generator_scale
//   [operator]   e0, L, dt, window, lambdas, n, field_dt, lambda_max, t_bins, lambda_bins, ...
//   [sde]        kind and the parameters of the chosen diffusion
//   [explosion]  quadrature sweep grid
//   [tolerances] significance, dispersion band, relative mean tolerance, skip rate
//   [report]     criteria to run in report mode
// Unknown keys are rejected so that typos do not silently fall back to defaults.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>
#include <toml.hpp>

#include "prufer_lab/error.hpp"
#include "prufer_lab/limit_sde.hpp"
#include "prufer_lab/spectrum.hpp"
#include "prufer_lab/torus.hpp"

namespace prufer_lab {

enum class Mode { kSpectrum, kJumpField, kLimitSde, kSineBeta, kExplosion, kPhase, kReport };

inline Mode parse_mode(std::string_view s) {
  if (s == "spectrum") return Mode::kSpectrum;
  if (s == "jump-field") return Mode::kJumpField;
  if (s == "limit-sde") return Mode::kLimitSde;
  if (s == "sine-beta") return Mode::kSineBeta;
  if (s == "explosion") return Mode::kExplosion;
  if (s == "phase") return Mode::kPhase;
  if (s == "report") return Mode::kReport;
  throw ConfigError("unknown mode '" + std::string(s) + "'");
}

inline std::string mode_name(Mode m) {
  switch (m) {
    case Mode::kSpectrum: return "spectrum";
    case Mode::kJumpField: return "jump-field";
    case Mode::kLimitSde: return "limit-sde";
    case Mode::kSineBeta: return "sine-beta";
    case Mode::kExplosion: return "explosion";
    case Mode::kPhase: return "phase";
    case Mode::kReport: return "report";
  }
  return "?";
}

struct OperatorConfig {
  double e0 = 1.0;
  double L = 400.0;
  double dt = 0.004;
  Window window{0.0, 8.0 * kPi};
  std::vector<double> lambdas{kPi, 2.0 * kPi};
  double points_per_level = 32.0;
  int substeps = 1;
  // jump field
  double n = 1000.0;
  double field_dt = 0.005;
  double lambda_max = 4.0 * kPi;
  int t_bins = 4;
  int lambda_bins = 4;
};

enum class SdeMode { kRiccati, kStationaryPlus, kStationaryMinus, kRelativePhase, kSineBeta };

struct SdeSection {
  SdeMode kind = SdeMode::kStationaryPlus;
  SdeConfig base;
  TimePower time_power = TimePower::kUniform;
  double horizon = 10.0;
  std::size_t stop_after_explosions = 1;
  std::size_t dump_stride = 10;  // stride of the first-run path dump
  // sine-beta
  double beta = 2.0;
  std::vector<double> lambdas{0.0, 8.0 * kPi};
  SineBetaOptions sine;
  // relative phase
  RelativePhaseSde relative;
};

struct ExplosionSection {
  std::vector<double> c_values{20.0, 50.0};
  std::vector<double> lambdas{kPi};
  std::vector<double> starts{-8.0, -5.0, -2.0, 0.0, 2.0};
  double delta = 0.0;
  double epsilon = 0.0;
  double truncation = 8.0;
};

struct Tolerances {
  double significance = 0.01;
  double dispersion_lo = 0.8;
  double dispersion_hi = 1.2;
  double mean_rel = 0.10;
  double skip_rate = 0.01;
};

struct ExperimentConfig {
  Mode mode = Mode::kSpectrum;
  std::size_t runs = 1;
  std::uint64_t seed = 0;
  unsigned threads = 0;
  std::string out = "out";
  bool checks = true;
  PotentialSpec potential = default_potential(0.3);
  OperatorConfig op;
  SdeSection sde;
  ExplosionSection explosion;
  Tolerances tol;
  std::vector<int> criteria{1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11};
  double report_scale = 1.0;  // multiplies every ensemble size in report mode
  std::set<std::string> tables;  // tables present in the source file
};

namespace detail {

inline void reject_unknown(const toml::table& t, std::string_view name, std::initializer_list<std::string_view> keys) {
  const std::set<std::string_view> allowed(keys);
  for (const auto& [k, v] : t) {
    if (!allowed.count(k.str())) {
      std::ostringstream msg;
      msg << "unknown key '" << k.str() << "' in [" << name << "]";
      if (k.source().begin) msg << " at line " << k.source().begin.line << ", column " << k.source().begin.column;
      throw ConfigError(msg.str());
    }
  }
}

inline std::string where(const toml::node& n) {
  std::ostringstream s;
  if (n.source().begin) s << " (line " << n.source().begin.line << ", column " << n.source().begin.column << ")";
  return s.str();
}

inline double get_real(const toml::table& t, std::string_view key, double fallback) {
  const auto* node = t.get(key);
  if (!node) return fallback;
  if (auto v = node->value<double>()) return *v;
  throw ConfigError("key '" + std::string(key) + "' must be a number" + where(*node));
}

inline std::int64_t get_int(const toml::table& t, std::string_view key, std::int64_t fallback) {
  const auto* node = t.get(key);
  if (!node) return fallback;
  if (node->is_integer()) return node->as_integer()->get();
  throw ConfigError("key '" + std::string(key) + "' must be an integer" + where(*node));
}

inline bool get_bool(const toml::table& t, std::string_view key, bool fallback) {
  const auto* node = t.get(key);
  if (!node) return fallback;
  if (node->is_boolean()) return node->as_boolean()->get();
  throw ConfigError("key '" + std::string(key) + "' must be a boolean" + where(*node));
}

inline std::string get_string(const toml::table& t, std::string_view key, std::string fallback) {
  const auto* node = t.get(key);
  if (!node) return fallback;
  if (auto v = node->value<std::string>()) return *v;
  throw ConfigError("key '" + std::string(key) + "' must be a string" + where(*node));
}

inline std::vector<double> get_reals(const toml::table& t, std::string_view key, std::vector<double> fallback) {
  const auto* node = t.get(key);
  if (!node) return fallback;
  const auto* arr = node->as_array();
  if (!arr) throw ConfigError("key '" + std::string(key) + "' must be an array of numbers" + where(*node));
  std::vector<double> out;
  for (const auto& e : *arr) {
    auto v = e.value<double>();
    if (!v) throw ConfigError("key '" + std::string(key) + "' must be an array of numbers" + where(e));
    out.push_back(*v);
  }
  return out;
}

inline const toml::table* sub_table(const toml::table& root, std::string_view name) {
  const auto* node = root.get(name);
  if (!node) return nullptr;
  if (const auto* t = node->as_table()) return t;
  throw ConfigError("[" + std::string(name) + "] must be a table" + where(*node));
}

inline SdeMode parse_sde_kind(const std::string& s) {
  if (s == "riccati") return SdeMode::kRiccati;
  if (s == "stationary_plus") return SdeMode::kStationaryPlus;
  if (s == "stationary_minus") return SdeMode::kStationaryMinus;
  if (s == "relative_phase") return SdeMode::kRelativePhase;
  if (s == "sine_beta") return SdeMode::kSineBeta;
  throw ConfigError("unknown sde kind '" + s + "'");
}

inline std::string sde_kind_name(SdeMode k) {
  switch (k) {
    case SdeMode::kRiccati: return "riccati";
    case SdeMode::kStationaryPlus: return "stationary_plus";
    case SdeMode::kStationaryMinus: return "stationary_minus";
    case SdeMode::kRelativePhase: return "relative_phase";
    case SdeMode::kSineBeta: return "sine_beta";
  }
  return "?";
}

inline void read_potential(const toml::table& t, PotentialSpec& p) {
  reject_unknown(t, "potential", {"alpha", "dim", "fourier", "profile", "coupling", "generator_scale"});
  p.alpha = get_real(t, "alpha", p.alpha);
  p.dim = static_cast<int>(get_int(t, "dim", p.dim));
  p.coupling = get_real(t, "coupling", p.coupling);
  p.generator_scale = get_real(t, "generator_scale", p.generator_scale);
  const auto profile = get_string(t, "profile", "power");
  if (profile == "power") {
    p.profile = DecayProfile::kPowerDecay;
  } else if (profile == "constant") {
    p.profile = DecayProfile::kConstantCoupling;
  } else {
    throw ConfigError("profile must be 'power' or 'constant'");
  }
  if (const auto* node = t.get("fourier")) {
    const auto* arr = node->as_array();
    if (!arr) throw ConfigError("fourier must be an array of [k..., re, im] rows" + where(*node));
    p.fourier.clear();
    for (const auto& row_node : *arr) {
      const auto* row = row_node.as_array();
      if (!row || row->size() != static_cast<std::size_t>(p.dim) + 2) {
        throw ConfigError("each fourier row needs dim integers followed by re and im" + where(row_node));
      }
      FourierMode m;
      for (int i = 0; i < p.dim; ++i) {
        const auto* k = (*row)[static_cast<std::size_t>(i)].as_integer();
        if (!k) throw ConfigError("fourier wave-vector entries must be integers" + where(row_node));
        m.k.push_back(static_cast<int>(k->get()));
      }
      const auto re = (*row)[static_cast<std::size_t>(p.dim)].value<double>();
      const auto im = (*row)[static_cast<std::size_t>(p.dim) + 1].value<double>();
      if (!re || !im) throw ConfigError("fourier coefficients must be numbers" + where(row_node));
      m.c = Complex(*re, *im);
      p.fourier.push_back(std::move(m));
    }
  }
}

inline void read_operator(const toml::table& t, OperatorConfig& o) {
  reject_unknown(t, "operator", {"e0", "L", "dt", "window", "lambdas", "points_per_level", "substeps", "n",
                                 "field_dt", "lambda_max", "t_bins", "lambda_bins"});
  o.e0 = get_real(t, "e0", o.e0);
  o.L = get_real(t, "L", o.L);
  o.dt = get_real(t, "dt", o.dt);
  const auto w = get_reals(t, "window", {o.window.lo, o.window.hi});
  if (w.size() != 2) throw ConfigError("window must be [lo, hi]");
  o.window = {w[0], w[1]};
  o.lambdas = get_reals(t, "lambdas", o.lambdas);
  o.points_per_level = get_real(t, "points_per_level", o.points_per_level);
  o.substeps = static_cast<int>(get_int(t, "substeps", o.substeps));
  o.n = get_real(t, "n", o.n);
  o.field_dt = get_real(t, "field_dt", o.field_dt);
  o.lambda_max = get_real(t, "lambda_max", o.lambda_max);
  o.t_bins = static_cast<int>(get_int(t, "t_bins", o.t_bins));
  o.lambda_bins = static_cast<int>(get_int(t, "lambda_bins", o.lambda_bins));
}

inline void read_sde(const toml::table& t, SdeSection& s) {
  reject_unknown(t, "sde", {"kind", "c_n", "lambda", "gamma", "delta", "epsilon", "dt", "r_cap", "r0", "step_limit",
                            "time_power", "horizon", "stop_after_explosions", "dump_stride", "beta", "lambdas",
                            "alpha", "n", "t_floor", "noise_scale", "complex_bm_variance"});
  s.kind = parse_sde_kind(get_string(t, "kind", sde_kind_name(s.kind)));
  auto& b = s.base;
  b.c_n = get_real(t, "c_n", b.c_n);
  b.lambda = get_real(t, "lambda", b.lambda);
  b.gamma = get_real(t, "gamma", b.gamma);
  b.delta = get_real(t, "delta", b.delta);
  b.epsilon = get_real(t, "epsilon", b.epsilon);
  b.dt = get_real(t, "dt", b.dt);
  b.r_cap = get_real(t, "r_cap", b.r_cap);
  b.step_limit = get_real(t, "step_limit", b.step_limit);
  if (t.get("r0")) b.r0 = get_real(t, "r0", 0.0);
  const auto tp = get_string(t, "time_power", "uniform");
  if (tp == "uniform") {
    s.time_power = TimePower::kUniform;
  } else if (tp == "gamma_power") {
    s.time_power = TimePower::kGammaPower;
  } else {
    throw ConfigError("time_power must be 'uniform' or 'gamma_power'");
  }
  s.horizon = get_real(t, "horizon", s.horizon);
  s.stop_after_explosions = static_cast<std::size_t>(get_int(t, "stop_after_explosions",
                                                             static_cast<std::int64_t>(s.stop_after_explosions)));
  s.dump_stride = static_cast<std::size_t>(get_int(t, "dump_stride", static_cast<std::int64_t>(s.dump_stride)));
  s.beta = get_real(t, "beta", s.beta);
  s.lambdas = get_reals(t, "lambdas", s.lambdas);
  s.sine.horizon = get_real(t, "horizon", s.sine.horizon);
  s.sine.dt = get_real(t, "dt", s.sine.dt);
  s.sine.complex_bm_variance = get_real(t, "complex_bm_variance", s.sine.complex_bm_variance);
  auto& r = s.relative;
  r.alpha = get_real(t, "alpha", r.alpha);
  r.n = get_real(t, "n", r.n);
  r.dt = get_real(t, "dt", r.dt);
  r.t_floor = get_real(t, "t_floor", r.t_floor);
  r.horizon = get_real(t, "horizon", r.horizon);
  if (t.get("noise_scale")) r.noise_scale = get_real(t, "noise_scale", 0.0);
  r.complex_bm_variance = get_real(t, "complex_bm_variance", r.complex_bm_variance);
}

inline void read_explosion(const toml::table& t, ExplosionSection& e) {
  reject_unknown(t, "explosion", {"c_values", "lambdas", "starts", "delta", "epsilon", "truncation"});
  e.c_values = get_reals(t, "c_values", e.c_values);
  e.lambdas = get_reals(t, "lambdas", e.lambdas);
  e.starts = get_reals(t, "starts", e.starts);
  e.delta = get_real(t, "delta", e.delta);
  e.epsilon = get_real(t, "epsilon", e.epsilon);
  e.truncation = get_real(t, "truncation", e.truncation);
}

inline void read_tolerances(const toml::table& t, Tolerances& tol) {
  reject_unknown(t, "tolerances", {"significance", "dispersion_lo", "dispersion_hi", "mean_rel", "skip_rate"});
  tol.significance = get_real(t, "significance", tol.significance);
  tol.dispersion_lo = get_real(t, "dispersion_lo", tol.dispersion_lo);
  tol.dispersion_hi = get_real(t, "dispersion_hi", tol.dispersion_hi);
  tol.mean_rel = get_real(t, "mean_rel", tol.mean_rel);
  tol.skip_rate = get_real(t, "skip_rate", tol.skip_rate);
}

}  // namespace detail

inline void validate(const ExperimentConfig& c) {
  if (c.runs < 1) throw ConfigError("runs must be >= 1");
  try {
    validate(c.potential);
  } catch (const ParameterError& e) {
    throw ConfigError(std::string("[potential] ") + e.what());
  }
  if (!(c.tol.significance > 0.0 && c.tol.significance < 1.0)) throw ConfigError("significance must lie in (0, 1)");
  if (!(c.tol.dispersion_lo < c.tol.dispersion_hi)) throw ConfigError("dispersion band is empty");
  if (c.op.t_bins < 1 || c.op.lambda_bins < 1) throw ConfigError("bin counts must be positive");
  if (!(c.report_scale > 0.0)) throw ConfigError("report scale must be positive");
}

// Parses TOML text; `source` names the input in diagnostics. Parse errors are
// reported as ConfigError with "source:line:column: description".
inline ExperimentConfig parse_config(std::string_view text, std::string_view source = "config") {
  toml::table root;
  try {
    root = toml::parse(text, source);
  } catch (const toml::parse_error& e) {
    std::ostringstream msg;
    msg << source << ':' << e.source().begin.line << ':' << e.source().begin.column << ": " << e.description();
    throw ConfigError(msg.str());
  }
  detail::reject_unknown(root, "top level",
                         {"experiment", "potential", "operator", "sde", "explosion", "tolerances", "report"});
  ExperimentConfig c;
  for (const auto& [k, v] : root) c.tables.insert(std::string(k.str()));
  if (const auto* t = detail::sub_table(root, "experiment")) {
    detail::reject_unknown(*t, "experiment", {"mode", "runs", "seed", "threads", "out", "checks"});
    if (t->get("mode")) c.mode = parse_mode(detail::get_string(*t, "mode", ""));
    const auto runs = detail::get_int(*t, "runs", 1);
    if (runs < 1) throw ConfigError("runs must be >= 1");
    c.runs = static_cast<std::size_t>(runs);
    const auto seed = detail::get_int(*t, "seed", 0);
    if (seed < 0) throw ConfigError("seed must be non-negative");
    c.seed = static_cast<std::uint64_t>(seed);
    const auto threads = detail::get_int(*t, "threads", 0);
    if (threads < 0) throw ConfigError("threads must be non-negative");
    c.threads = static_cast<unsigned>(threads);
    c.out = detail::get_string(*t, "out", c.out);
    c.checks = detail::get_bool(*t, "checks", c.checks);
  }
  if (const auto* t = detail::sub_table(root, "potential")) detail::read_potential(*t, c.potential);
  if (const auto* t = detail::sub_table(root, "operator")) detail::read_operator(*t, c.op);
  if (const auto* t = detail::sub_table(root, "sde")) detail::read_sde(*t, c.sde);
  if (const auto* t = detail::sub_table(root, "explosion")) detail::read_explosion(*t, c.explosion);
  if (const auto* t = detail::sub_table(root, "tolerances")) detail::read_tolerances(*t, c.tol);
  if (const auto* t = detail::sub_table(root, "report")) {
    detail::reject_unknown(*t, "report", {"criteria", "scale"});
    c.criteria.clear();
    for (double v : detail::get_reals(*t, "criteria", {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11})) {
      c.criteria.push_back(static_cast<int>(v));
    }
    c.report_scale = detail::get_real(*t, "scale", c.report_scale);
  }
  validate(c);
  return c;
}

// Tables a mode reads must be spelled out in the file.
inline void require_tables(const ExperimentConfig& c) {
  std::vector<std::string> need;
  switch (c.mode) {
    case Mode::kSpectrum:
    case Mode::kPhase:
    case Mode::kJumpField: need = {"potential", "operator"}; break;
    case Mode::kLimitSde:
    case Mode::kSineBeta: need = {"sde"}; break;
    case Mode::kExplosion: need = {"explosion"}; break;
    case Mode::kReport: break;
  }
  for (const auto& t : need) {
    if (!c.tables.count(t)) throw ConfigError("mode '" + mode_name(c.mode) + "' needs a [" + t + "] table");
  }
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path.string());
}

// Resolved configuration echoed into every output. Worker count and output
// directory are omitted: they do not change results.
inline nlohmann::json to_json(const ExperimentConfig& c) {
  using nlohmann::json;
  json fourier = json::array();
  for (const auto& m : c.potential.fourier) {
    json row = json::array();
    for (int k : m.k) row.push_back(k);
    row.push_back(m.c.real());
    row.push_back(m.c.imag());
    fourier.push_back(row);
  }
  json j;
  j["experiment"] = {{"mode", mode_name(c.mode)}, {"runs", c.runs}, {"seed", c.seed}, {"checks", c.checks}};
  j["potential"] = {{"alpha", c.potential.alpha},
                    {"dim", c.potential.dim},
                    {"fourier", fourier},
                    {"profile", c.potential.profile == DecayProfile::kPowerDecay ? "power" : "constant"},
                    {"coupling", c.potential.coupling},
                    {"generator_scale", c.potential.generator_scale}};
  j["operator"] = {{"e0", c.op.e0},
                   {"L", c.op.L},
                   {"dt", c.op.dt},
                   {"window", {c.op.window.lo, c.op.window.hi}},
                   {"lambdas", c.op.lambdas},
                   {"points_per_level", c.op.points_per_level},
                   {"substeps", c.op.substeps},
                   {"n", c.op.n},
                   {"field_dt", c.op.field_dt},
                   {"lambda_max", c.op.lambda_max},
                   {"t_bins", c.op.t_bins},
                   {"lambda_bins", c.op.lambda_bins}};
  const auto& s = c.sde;
  json sde = {{"kind", detail::sde_kind_name(s.kind)},
              {"c_n", s.base.c_n},
              {"lambda", s.base.lambda},
              {"gamma", s.base.gamma},
              {"delta", s.base.delta},
              {"epsilon", s.base.epsilon},
              {"dt", s.base.dt},
              {"r_cap", s.base.r_cap},
              {"step_limit", s.base.step_limit},
              {"time_power", s.time_power == TimePower::kUniform ? "uniform" : "gamma_power"},
              {"horizon", s.horizon},
              {"stop_after_explosions", s.stop_after_explosions},
              {"dump_stride", s.dump_stride},
              {"beta", s.beta},
              {"lambdas", s.lambdas},
              {"alpha", s.relative.alpha},
              {"n", s.relative.n},
              {"t_floor", s.relative.t_floor},
              {"complex_bm_variance", s.relative.complex_bm_variance}};
  // dt and horizon are shared keys with family-specific defaults; echo what each family uses.
  sde["effective"] = {{"sine_beta", {{"dt", s.sine.dt}, {"horizon", s.sine.horizon}}},
                      {"relative_phase", {{"dt", s.relative.dt}, {"horizon", s.relative.horizon}}}};
  sde["r0"] = s.base.r0 ? json(*s.base.r0) : json(nullptr);
  sde["noise_scale"] = s.relative.noise_scale ? json(*s.relative.noise_scale) : json(nullptr);
  j["sde"] = sde;
  j["explosion"] = {{"c_values", c.explosion.c_values}, {"lambdas", c.explosion.lambdas},
                    {"starts", c.explosion.starts},     {"delta", c.explosion.delta},
                    {"epsilon", c.explosion.epsilon},   {"truncation", c.explosion.truncation}};
  j["tolerances"] = {{"significance", c.tol.significance}, {"dispersion_lo", c.tol.dispersion_lo},
                     {"dispersion_hi", c.tol.dispersion_hi}, {"mean_rel", c.tol.mean_rel},
                     {"skip_rate", c.tol.skip_rate}};
  j["report"] = {{"criteria", c.criteria}, {"scale", c.report_scale}};
  return j;
}

}  // namespace prufer_lab
