#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <set>
#include <string>

#include <json.hpp>

#include "twosys/common.hpp"
#include "twosys/kernels.hpp"
#include "twosys/sweeps.hpp"
#include "twosys/version.hpp"

namespace twosys {

using Json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Enum <-> string names used in config files and reports
// ---------------------------------------------------------------------------

inline std::string to_string(Kernel k) {
  switch (k) {
    case Kernel::mala: return "mala";
    case Kernel::truncated_mala: return "truncated-mala";
    case Kernel::makla: return "makla";
  }
  return "?";
}

inline std::string to_string(Mode m) {
  switch (m) {
    case Mode::vanilla: return "vanilla";
    case Mode::coupled: return "coupled";
    case Mode::adaptive_1sys: return "adaptive-1sys";
    case Mode::adaptive_2sys: return "adaptive-2sys";
  }
  return "?";
}

inline std::string to_string(RestartKind k) {
  return k == RestartKind::hard ? "hard" : "soft";
}
inline std::string to_string(StepDraw d) {
  return d == StepDraw::per_particle ? "per-particle" : "per-sweep";
}
inline std::string to_string(EtaConvention c) {
  return c == EtaConvention::paper_literal ? "paper-literal" : "persistence";
}

template <typename Enum>
Enum enum_from_string(const std::string& s, const std::string& path);

template <>
inline Kernel enum_from_string<Kernel>(const std::string& s, const std::string& path) {
  if (s == "mala") return Kernel::mala;
  if (s == "truncated-mala") return Kernel::truncated_mala;
  if (s == "makla") return Kernel::makla;
  throw ConfigError(path + ": unknown kernel '" + s + "'");
}
template <>
inline Mode enum_from_string<Mode>(const std::string& s, const std::string& path) {
  if (s == "vanilla") return Mode::vanilla;
  if (s == "coupled") return Mode::coupled;
  if (s == "adaptive-1sys") return Mode::adaptive_1sys;
  if (s == "adaptive-2sys") return Mode::adaptive_2sys;
  throw ConfigError(path + ": unknown mode '" + s + "'");
}
template <>
inline RestartKind enum_from_string<RestartKind>(const std::string& s, const std::string& path) {
  if (s == "hard") return RestartKind::hard;
  if (s == "soft") return RestartKind::soft;
  throw ConfigError(path + ": unknown restart kind '" + s + "'");
}
template <>
inline StepDraw enum_from_string<StepDraw>(const std::string& s, const std::string& path) {
  if (s == "per-particle") return StepDraw::per_particle;
  if (s == "per-sweep") return StepDraw::per_sweep;
  throw ConfigError(path + ": unknown step draw '" + s + "'");
}
template <>
inline EtaConvention enum_from_string<EtaConvention>(const std::string& s,
                                                     const std::string& path) {
  if (s == "paper-literal") return EtaConvention::paper_literal;
  if (s == "persistence") return EtaConvention::persistence;
  throw ConfigError(path + ": unknown eta convention '" + s + "'");
}

// ---------------------------------------------------------------------------
// Experiment configuration
// ---------------------------------------------------------------------------

struct TargetSpec {
  std::string name = "gaussian";  // gaussian | student_t | funnel
  int dim = 2;
  double eig_min = 1e-2;   // gaussian and student_t: SPD spectrum range
  double eig_max = 1e2;
  std::uint64_t spd_seed = 1;
  double nu = 4.0;     // student_t
  double sigma = 3.0;  // funnel

  bool operator==(const TargetSpec&) const = default;
};

struct SamplerSpec {
  Kernel kernel = Kernel::mala;
  Mode mode = Mode::coupled;
  double h_max = 0.5;
  int leapfrog_steps = 1;
  double eta = 0.9;
  std::optional<double> eta_gamma;  // when set, eta is derived from the final h
  EtaConvention eta_convention = EtaConvention::paper_literal;
  double jitter = 1e-6;
  double drift_delta = 1000.0;
  double cov_cap = 1e6;
  bool step_randomization = false;
  double beta = 0.5;  // only used when step_randomization is on
  StepDraw step_draw = StepDraw::per_particle;
  RestartKind restart_kind = RestartKind::hard;

  bool operator==(const SamplerSpec&) const = default;
};

/// Both sweep-count presets ship: "synthetic" takes literal counts with one
/// sample per sweep, "scaled" multiplies unit counts by ceil(1/h) and thins
/// by ceil(1/h), with restarts stopping at half the burn-in.
struct ScheduleSpec {
  std::string preset = "synthetic";  // synthetic | scaled
  long burn_in = 1000;
  long sweeps = 4000;
  long thin = 1;
  long restart_period = 0;
  long restart_last = 0;
  long burn_in_units = 2000;
  long sweep_units = 4000;
  long restart_units = 200;

  bool operator==(const ScheduleSpec&) const = default;
};

struct ExperimentConfig {
  int version = kConfigVersion;
  std::uint64_t seed = 1;
  int runs = 1;
  int particles = 8;  // total across both systems; must be even
  TargetSpec target;
  SamplerSpec sampler;
  ScheduleSpec schedule;
  bool rescale = false;
  double rescale_eps = 1e-6;
  bool tune_acceptance = false;
  long tune_probe_sweeps = 100;
  long ess_window = 0;  // 0 = use the full sampling series
  std::string emit_samples = "none";  // none | binary | csv
  std::string out_dir = "out";

  bool operator==(const ExperimentConfig&) const = default;
};

// ---------------------------------------------------------------------------
// JSON (de)serialization with strict unknown-key checking
// ---------------------------------------------------------------------------

namespace detail {
inline void check_keys(const Json& j, const std::set<std::string>& allowed,
                       const std::string& path) {
  if (!j.is_object()) throw ConfigError(path + ": expected an object");
  for (const auto& item : j.items()) {
    if (!allowed.contains(item.key())) {
      throw ConfigError(path + "/" + item.key() + ": unknown key");
    }
  }
}

template <typename T>
T get_or(const Json& j, const std::string& key, const T& fallback, const std::string& path) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(path + "/" + key + ": wrong type");
  }
}
}  // namespace detail

inline Json to_json(const TargetSpec& t) {
  Json j;
  j["name"] = t.name;
  j["dim"] = t.dim;
  j["eig_min"] = t.eig_min;
  j["eig_max"] = t.eig_max;
  j["spd_seed"] = t.spd_seed;
  j["nu"] = t.nu;
  j["sigma"] = t.sigma;
  return j;
}

inline TargetSpec target_from_json(const Json& j, const std::string& path) {
  detail::check_keys(j, {"name", "dim", "eig_min", "eig_max", "spd_seed", "nu", "sigma"}, path);
  TargetSpec t;
  t.name = detail::get_or<std::string>(j, "name", t.name, path);
  if (t.name != "gaussian" && t.name != "student_t" && t.name != "funnel") {
    throw ConfigError(path + "/name: unknown target '" + t.name + "'");
  }
  t.dim = detail::get_or<int>(j, "dim", t.dim, path);
  t.eig_min = detail::get_or<double>(j, "eig_min", t.eig_min, path);
  t.eig_max = detail::get_or<double>(j, "eig_max", t.eig_max, path);
  t.spd_seed = detail::get_or<std::uint64_t>(j, "spd_seed", t.spd_seed, path);
  t.nu = detail::get_or<double>(j, "nu", t.nu, path);
  t.sigma = detail::get_or<double>(j, "sigma", t.sigma, path);
  return t;
}

inline Json to_json(const SamplerSpec& s) {
  Json j;
  j["kernel"] = to_string(s.kernel);
  j["mode"] = to_string(s.mode);
  j["h_max"] = s.h_max;
  j["leapfrog_steps"] = s.leapfrog_steps;
  j["eta"] = s.eta;
  if (s.eta_gamma) j["eta_gamma"] = *s.eta_gamma;
  j["eta_convention"] = to_string(s.eta_convention);
  j["jitter"] = s.jitter;
  j["drift_delta"] = s.drift_delta;
  j["cov_cap"] = s.cov_cap;
  j["step_randomization"] = s.step_randomization;
  j["beta"] = s.beta;
  j["step_draw"] = to_string(s.step_draw);
  j["restart_kind"] = to_string(s.restart_kind);
  return j;
}

inline SamplerSpec sampler_from_json(const Json& j, const std::string& path) {
  detail::check_keys(j,
                     {"kernel", "mode", "h_max", "leapfrog_steps", "eta", "eta_gamma",
                      "eta_convention", "jitter", "drift_delta", "cov_cap",
                      "step_randomization", "beta", "step_draw", "restart_kind"},
                     path);
  SamplerSpec s;
  s.kernel = enum_from_string<Kernel>(
      detail::get_or<std::string>(j, "kernel", to_string(s.kernel), path), path + "/kernel");
  s.mode = enum_from_string<Mode>(
      detail::get_or<std::string>(j, "mode", to_string(s.mode), path), path + "/mode");
  s.h_max = detail::get_or<double>(j, "h_max", s.h_max, path);
  s.leapfrog_steps = detail::get_or<int>(j, "leapfrog_steps", s.leapfrog_steps, path);
  s.eta = detail::get_or<double>(j, "eta", s.eta, path);
  if (j.contains("eta_gamma")) s.eta_gamma = detail::get_or<double>(j, "eta_gamma", 0.0, path);
  s.eta_convention = enum_from_string<EtaConvention>(
      detail::get_or<std::string>(j, "eta_convention", to_string(s.eta_convention), path),
      path + "/eta_convention");
  s.jitter = detail::get_or<double>(j, "jitter", s.jitter, path);
  s.drift_delta = detail::get_or<double>(j, "drift_delta", s.drift_delta, path);
  s.cov_cap = detail::get_or<double>(j, "cov_cap", s.cov_cap, path);
  s.step_randomization = detail::get_or<bool>(j, "step_randomization", s.step_randomization, path);
  s.beta = detail::get_or<double>(j, "beta", s.beta, path);
  s.step_draw = enum_from_string<StepDraw>(
      detail::get_or<std::string>(j, "step_draw", to_string(s.step_draw), path),
      path + "/step_draw");
  s.restart_kind = enum_from_string<RestartKind>(
      detail::get_or<std::string>(j, "restart_kind", to_string(s.restart_kind), path),
      path + "/restart_kind");
  return s;
}

inline Json to_json(const ScheduleSpec& s) {
  Json j;
  j["preset"] = s.preset;
  j["burn_in"] = s.burn_in;
  j["sweeps"] = s.sweeps;
  j["thin"] = s.thin;
  j["restart_period"] = s.restart_period;
  j["restart_last"] = s.restart_last;
  j["burn_in_units"] = s.burn_in_units;
  j["sweep_units"] = s.sweep_units;
  j["restart_units"] = s.restart_units;
  return j;
}

inline ScheduleSpec schedule_from_json(const Json& j, const std::string& path) {
  detail::check_keys(j,
                     {"preset", "burn_in", "sweeps", "thin", "restart_period", "restart_last",
                      "burn_in_units", "sweep_units", "restart_units"},
                     path);
  ScheduleSpec s;
  s.preset = detail::get_or<std::string>(j, "preset", s.preset, path);
  if (s.preset != "synthetic" && s.preset != "scaled") {
    throw ConfigError(path + "/preset: must be 'synthetic' or 'scaled'");
  }
  s.burn_in = detail::get_or<long>(j, "burn_in", s.burn_in, path);
  s.sweeps = detail::get_or<long>(j, "sweeps", s.sweeps, path);
  s.thin = detail::get_or<long>(j, "thin", s.thin, path);
  s.restart_period = detail::get_or<long>(j, "restart_period", s.restart_period, path);
  s.restart_last = detail::get_or<long>(j, "restart_last", s.restart_last, path);
  s.burn_in_units = detail::get_or<long>(j, "burn_in_units", s.burn_in_units, path);
  s.sweep_units = detail::get_or<long>(j, "sweep_units", s.sweep_units, path);
  s.restart_units = detail::get_or<long>(j, "restart_units", s.restart_units, path);
  return s;
}

inline Json to_json(const ExperimentConfig& c) {
  Json j;
  j["version"] = c.version;
  j["seed"] = c.seed;
  j["runs"] = c.runs;
  j["particles"] = c.particles;
  j["target"] = to_json(c.target);
  j["sampler"] = to_json(c.sampler);
  j["schedule"] = to_json(c.schedule);
  j["rescale"] = c.rescale;
  j["rescale_eps"] = c.rescale_eps;
  j["tune_acceptance"] = c.tune_acceptance;
  j["tune_probe_sweeps"] = c.tune_probe_sweeps;
  j["ess_window"] = c.ess_window;
  j["emit_samples"] = c.emit_samples;
  j["out_dir"] = c.out_dir;
  return j;
}

inline ExperimentConfig config_from_json(const Json& j) {
  detail::check_keys(j,
                     {"version", "seed", "runs", "particles", "target", "sampler", "schedule",
                      "rescale", "rescale_eps", "tune_acceptance", "tune_probe_sweeps",
                      "ess_window", "emit_samples", "out_dir"},
                     "config");
  ExperimentConfig c;
  c.version = detail::get_or<int>(j, "version", -1, "config");
  if (c.version != kConfigVersion) {
    throw ConfigError("config/version: expected " + std::to_string(kConfigVersion));
  }
  c.seed = detail::get_or<std::uint64_t>(j, "seed", c.seed, "config");
  c.runs = detail::get_or<int>(j, "runs", c.runs, "config");
  c.particles = detail::get_or<int>(j, "particles", c.particles, "config");
  if (j.contains("target")) c.target = target_from_json(j.at("target"), "config/target");
  if (j.contains("sampler")) c.sampler = sampler_from_json(j.at("sampler"), "config/sampler");
  if (j.contains("schedule"))
    c.schedule = schedule_from_json(j.at("schedule"), "config/schedule");
  c.rescale = detail::get_or<bool>(j, "rescale", c.rescale, "config");
  c.rescale_eps = detail::get_or<double>(j, "rescale_eps", c.rescale_eps, "config");
  c.tune_acceptance = detail::get_or<bool>(j, "tune_acceptance", c.tune_acceptance, "config");
  c.tune_probe_sweeps =
      detail::get_or<long>(j, "tune_probe_sweeps", c.tune_probe_sweeps, "config");
  c.ess_window = detail::get_or<long>(j, "ess_window", c.ess_window, "config");
  c.emit_samples = detail::get_or<std::string>(j, "emit_samples", c.emit_samples, "config");
  if (c.emit_samples != "none" && c.emit_samples != "binary" && c.emit_samples != "csv") {
    throw ConfigError("config/emit_samples: must be none, binary or csv");
  }
  c.out_dir = detail::get_or<std::string>(j, "out_dir", c.out_dir, "config");
  return c;
}

inline ExperimentConfig parse_config(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: parse failure: ") + e.what());
  }
  return config_from_json(j);
}

inline std::string serialize_config(const ExperimentConfig& c) { return to_json(c).dump(2); }

// ---------------------------------------------------------------------------
// Validation and schedule resolution
// ---------------------------------------------------------------------------

/// Concrete sweep counts once the step size is known.
struct ResolvedSchedule {
  long burn_in = 0;
  long sweeps = 0;
  long thin = 1;
  long restart_period = 0;
  long restart_last = 0;
};

inline ResolvedSchedule resolve_schedule(const ScheduleSpec& s, double h) {
  ResolvedSchedule r;
  if (s.preset == "synthetic") {
    r.burn_in = s.burn_in;
    r.sweeps = s.sweeps;
    r.thin = s.thin;
    r.restart_period = s.restart_period;
    r.restart_last = s.restart_last;
  } else {
    const long unit = static_cast<long>(std::ceil(1.0 / h));
    r.burn_in = s.burn_in_units * unit;
    r.sweeps = s.sweep_units * unit;
    r.thin = unit;
    r.restart_period = s.restart_units * unit;
    r.restart_last = r.burn_in / 2;
  }
  return r;
}

/// SamplerConfig for a run, given the resolved h and eta.
inline SamplerConfig make_sampler_config(const ExperimentConfig& c, double h, double eta,
                                         const ResolvedSchedule& sched) {
  SamplerConfig cfg;
  cfg.kernel = c.sampler.kernel;
  cfg.mode = c.sampler.mode;
  cfg.h_max = h;
  cfg.beta = c.sampler.step_randomization ? c.sampler.beta : 1.0;
  cfg.leapfrog_steps = c.sampler.leapfrog_steps;
  cfg.eta = eta;
  cfg.jitter = c.sampler.jitter;
  cfg.drift_delta = c.sampler.drift_delta;
  cfg.cov_cap = c.sampler.cov_cap;
  cfg.burn_in = sched.burn_in;
  cfg.sweeps = sched.sweeps;
  cfg.thin = sched.thin;
  const bool adaptive = c.sampler.mode == Mode::adaptive_1sys || c.sampler.mode == Mode::adaptive_2sys;
  cfg.restart_period = adaptive ? sched.restart_period : 0;
  cfg.restart_last = adaptive ? sched.restart_last : 0;
  cfg.restart_kind = c.sampler.restart_kind;
  cfg.step_draw = c.sampler.step_draw;
  return cfg;
}

struct ValidationReport {
  std::vector<std::string> violations;
  Json resolved;  // effective configuration incl. derived quantities
  bool ok() const { return violations.empty(); }
};

/// Schema-level and cross-field checks, plus the resolved effective values
/// (eta derived from gamma, sweep counts derived from ceil(1/h) presets).
inline ValidationReport validate_config(const ExperimentConfig& c) {
  ValidationReport rep;
  auto flag = [&rep](const std::string& s) { rep.violations.push_back(s); };

  if (c.runs < 1) flag("runs: must be >= 1");
  if (c.particles < 2 || c.particles % 2 != 0)
    flag("particles: must be an even count >= 2 (split across two systems)");
  if (c.target.dim < 1) flag("target/dim: must be >= 1");
  if (c.target.name == "funnel" && c.target.dim < 2) flag("target/dim: funnel needs dim >= 2");
  if (c.target.name == "funnel" && !(c.target.sigma > 0.0))
    flag("target/sigma: must be positive");
  if (c.target.name != "funnel") {
    if (!(c.target.eig_min > 0.0) || c.target.eig_min > c.target.eig_max)
      flag("target/eig_min,eig_max: need 0 < eig_min <= eig_max");
  }
  if (c.target.name == "student_t" && !(c.target.nu > 2.0))
    flag("target/nu: must exceed 2 for finite covariance");

  if (!(c.sampler.h_max > 0.0)) flag("sampler/h_max: must be positive");
  if (c.sampler.step_randomization && !(c.sampler.beta > 0.0 && c.sampler.beta <= 1.0))
    flag("sampler/beta: must lie in (0, 1]");
  if (c.sampler.leapfrog_steps < 1) flag("sampler/leapfrog_steps: must be >= 1");
  if (!(c.sampler.jitter > 0.0)) flag("sampler/jitter: must be positive");
  if (!(c.sampler.drift_delta > 0.0)) flag("sampler/drift_delta: must be positive");
  if (!(c.sampler.cov_cap > 0.0)) flag("sampler/cov_cap: must be positive");

  double eta = c.sampler.eta;
  if (c.sampler.eta_gamma) {
    if (!(*c.sampler.eta_gamma > 0.0)) {
      flag("sampler/eta_gamma: must be positive");
    } else {
      eta = eta_from_gamma(*c.sampler.eta_gamma, c.sampler.h_max, c.sampler.eta_convention);
    }
  }
  if (c.sampler.kernel == Kernel::makla && !(eta > 0.0 && eta < 1.0))
    flag("sampler/eta: resolved value must lie in (0, 1)");

  ResolvedSchedule sched = resolve_schedule(c.schedule, c.sampler.h_max);
  if (sched.burn_in < 0) flag("schedule/burn_in: must be >= 0");
  if (sched.sweeps < 0) flag("schedule/sweeps: must be >= 0");
  if (sched.thin < 1) flag("schedule/thin: must be >= 1");
  if (sched.restart_period > 0 && sched.restart_last > sched.burn_in)
    flag("schedule/restart_last: must be <= schedule/burn_in");
  if (c.ess_window < 0) flag("ess_window: must be >= 0");
  if (!(c.rescale_eps > 0.0)) flag("rescale_eps: must be positive");
  if (c.tune_probe_sweeps < 1) flag("tune_probe_sweeps: must be >= 1");

  rep.resolved["h_max"] = c.sampler.h_max;
  rep.resolved["eta"] = eta;
  rep.resolved["beta_effective"] = c.sampler.step_randomization ? c.sampler.beta : 1.0;
  rep.resolved["burn_in"] = sched.burn_in;
  rep.resolved["sweeps"] = sched.sweeps;
  rep.resolved["thin"] = sched.thin;
  rep.resolved["restart_period"] = sched.restart_period;
  rep.resolved["restart_last"] = sched.restart_last;
  rep.resolved["particles_per_system"] = c.particles / 2;
  if (c.tune_acceptance) {
    rep.resolved["note"] =
        "tune_acceptance is on: h, eta and scaled schedules are re-resolved after tuning";
  }
  return rep;
}

}  // namespace twosys
