#pragma once

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "it2lss/bench_pendulum.hpp"
#include "it2lss/dissipativity.hpp"
#include "it2lss/errors.hpp"
#include "it2lss/fou_partition.hpp"
#include "it2lss/io.hpp"
#include "it2lss/simulate.hpp"
#include "it2lss/synthesis.hpp"

namespace it2lss::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;

enum class Command { kSynth, kSimulate, kVerify, kBench };

inline const char* to_string(Command c) {
  switch (c) {
    case Command::kSynth: return "synth";
    case Command::kSimulate: return "simulate";
    case Command::kVerify: return "verify";
    case Command::kBench: return "bench";
  }
  return "?";
}

inline Command command_from_string(const std::string& s, const std::string& path) {
  if (s == "synth") return Command::kSynth;
  if (s == "simulate") return Command::kSimulate;
  if (s == "verify") return Command::kVerify;
  if (s == "bench") return Command::kBench;
  throw ConfigError(path + ": unknown command '" + s + "'");
}

// ---------------------------------------------------------------------------
// Exit codes

enum ExitCode : int {
  kOk = 0,
  kInternal = 1,
  kConfig = 2,
  kModel = 3,
  kInfeasible = 4,
  kDivergence = 5,
  kNumerical = 6,
  kCertification = 7,
  kIo = 8,
};

inline int exit_code_for(const Error& e) {
  const auto& c = e.code();
  if (c == "config") return kConfig;
  if (c == "input" || c == "degenerate-input" || c == "partition" ||
      c == "extrapolation" || c == "assumption") {
    return kModel;
  }
  if (c == "infeasible" || c == "bracket") return kInfeasible;
  if (c == "divergence") return kDivergence;
  if (c == "numerical") return kNumerical;
  if (c == "certification") return kCertification;
  if (c == "io") return kIo;
  return kInternal;
}

// ---------------------------------------------------------------------------
// Configuration

struct BuiltinPendulum {
  pendulum::PendulumParams params;
  bool disturbance = true;
};

using ModelSource = std::variant<std::monostate, fs::path, BuiltinPendulum>;

struct PerformanceConfig {
  std::string preset = "h_infinity";
  double gamma = 1.0;
  double epsilon = 0.1;
  double sigma = 0.1;
  double alpha = 0.1;
  std::optional<Matrix> q, s, r;
  std::optional<Matrix> phi, psi1, psi2, psi3;
  double rho = 0.0;
};

struct SimulationConfig {
  IntegrateOptions options;
  std::vector<Vector> initial_state;
  std::vector<std::vector<Signal>> disturbances;  // empty: ω ≡ 0
  std::optional<fs::path> gains_file;  // a synth result.json
  std::optional<GainTable> gains;      // inline
};

struct VerifyConfig {
  fs::path trajectory;
  std::optional<double> rho;      // overrides the supply rate's ρ
  std::optional<double> storage;  // V(x0); ρ = −V(x0) when set
};

struct BenchConfig {
  std::string name = "pendulum";
  pendulum::PendulumParams params;
  std::size_t cells_per_dim = 8;
  std::size_t lyapunov_runs = 20;
  double open_loop_horizon = 5.0;
  bool disturbance_free_variant = true;
};

struct RunConfig {
  Command command = Command::kBench;
  ModelSource model;
  PerformanceConfig performance;
  std::vector<StateBox> boxes;  // empty: model default
  PartitionOptions partition;
  std::optional<std::size_t> cells_per_dim;
  SynthesisOptions synthesis;
  bool minimize_gamma = false;
  SimulationConfig simulation;
  VerifyConfig verify;
  BenchConfig bench;
  fs::path output_dir = "out";
  std::uint64_t seed = 42;
};

namespace detail {

inline std::string sub(const std::string& p, const char* k) { return p + "." + k; }

inline bool bool_or(const json& o, const char* k, bool d, const std::string& p) {
  if (!o.contains(k)) return d;
  if (!o.at(k).is_boolean()) throw ConfigError(sub(p, k) + ": expected true or false");
  return o.at(k).get<bool>();
}

inline double positive_or(const json& o, const char* k, double d, const std::string& p) {
  const double v = io::number_or(o, k, d, p);
  if (!(v > 0.0)) throw ConfigError(sub(p, k) + ": must be positive");
  return v;
}

inline fs::path resolve(const fs::path& base, const std::string& s) {
  fs::path p(s);
  return p.is_absolute() ? p : base / p;
}

inline pendulum::PendulumParams pendulum_params(const json& j, const std::string& p) {
  pendulum::PendulumParams pp;
  io::check_keys(j, {"m1", "m2", "J1", "J2", "k", "r", "g", "r_deg", "fou_height",
                     "velocity_bound"},
                 p);
  pp.m1 = io::number_or(j, "m1", pp.m1, p);
  pp.m2 = io::number_or(j, "m2", pp.m2, p);
  pp.J1 = io::number_or(j, "J1", pp.J1, p);
  pp.J2 = io::number_or(j, "J2", pp.J2, p);
  pp.k = io::number_or(j, "k", pp.k, p);
  pp.r = io::number_or(j, "r", pp.r, p);
  pp.g = io::number_or(j, "g", pp.g, p);
  pp.r_deg = io::number_or(j, "r_deg", pp.r_deg, p);
  pp.fou_height = io::number_or(j, "fou_height", pp.fou_height, p);
  pp.velocity_bound = io::number_or(j, "velocity_bound", pp.velocity_bound, p);
  try {
    pp.validate();
  } catch (const InputError& e) {
    throw ConfigError(p + ": " + e.what());
  }
  return pp;
}

inline ModelSource model_source(const json& j, const fs::path& base, const std::string& p) {
  if (j.is_string()) {
    const auto path = resolve(base, j.get<std::string>());
    if (!fs::exists(path)) {
      throw ConfigError(p + ": model file '" + path.string() + "' does not exist");
    }
    return path;
  }
  io::check_keys(j, {"builtin", "params", "disturbance"}, p);
  const auto name = io::string_or(j, "builtin", "", p);
  if (name != "pendulum") {
    throw ConfigError(p + ".builtin: unknown builtin model '" + name + "'");
  }
  BuiltinPendulum b;
  if (j.contains("params")) b.params = pendulum_params(j["params"], p + ".params");
  b.disturbance = bool_or(j, "disturbance", true, p);
  return b;
}

inline PerformanceConfig performance(const json& j, const std::string& p) {
  io::check_keys(j, {"preset", "gamma", "epsilon", "sigma", "alpha", "Q", "S", "R", "phi",
                     "psi1", "psi2", "psi3", "rho"},
                 p);
  PerformanceConfig c;
  c.preset = io::string_or(j, "preset", c.preset, p);
  static const char* known[] = {"h_infinity", "energy_to_peak", "passivity",
                                "very_strict_passivity", "qsr", "custom"};
  if (std::find(std::begin(known), std::end(known), c.preset) == std::end(known)) {
    throw ConfigError(p + ".preset: unknown preset '" + c.preset + "'");
  }
  c.gamma = positive_or(j, "gamma", c.gamma, p);
  c.epsilon = positive_or(j, "epsilon", c.epsilon, p);
  c.sigma = positive_or(j, "sigma", c.sigma, p);
  c.alpha = positive_or(j, "alpha", c.alpha, p);
  c.rho = io::number_or(j, "rho", c.rho, p);
  auto mat = [&](const char* k, std::optional<Matrix>& dst) {
    if (j.contains(k)) dst = io::matrix_from_json<ConfigError>(j[k], sub(p, k));
  };
  mat("Q", c.q);
  mat("S", c.s);
  mat("R", c.r);
  mat("phi", c.phi);
  mat("psi1", c.psi1);
  mat("psi2", c.psi2);
  mat("psi3", c.psi3);
  if (c.preset == "qsr" && !(c.q && c.s && c.r)) {
    throw ConfigError(p + ": preset 'qsr' needs Q, S and R");
  }
  if (c.preset == "custom" && !(c.phi && c.psi1 && c.psi2 && c.psi3)) {
    throw ConfigError(p + ": preset 'custom' needs phi, psi1, psi2 and psi3");
  }
  return c;
}

inline StateBox state_box(const json& j, std::size_t cells, const std::string& p) {
  io::check_keys(j, {"lower", "upper", "cells_per_dim"}, p);
  StateBox b;
  b.lower = io::number_list(io::require(j, "lower", p), p + ".lower");
  b.upper = io::number_list(io::require(j, "upper", p), p + ".upper");
  if (j.contains("cells_per_dim")) {
    const auto& c = j["cells_per_dim"];
    if (c.is_array()) {
      for (std::size_t k = 0; k < c.size(); ++k) {
        if (!c[k].is_number_integer() || c[k].get<long long>() < 1) {
          throw ConfigError(p + ".cells_per_dim[" + std::to_string(k) +
                            "]: expected a positive integer");
        }
        b.cells_per_dim.push_back(c[k].get<std::size_t>());
      }
    } else {
      cells = io::count_or(j, "cells_per_dim", cells, p);
    }
  }
  if (b.cells_per_dim.empty()) b.cells_per_dim.assign(b.lower.size(), cells);
  try {
    b.validate();
  } catch (const InputError& e) {
    throw ConfigError(p + ": " + e.what());
  }
  return b;
}

inline void partition(const json& j, RunConfig& c, const std::string& p) {
  io::check_keys(j, {"box", "boxes", "cells_per_dim", "tau", "samples_per_cell"}, p);
  if (j.contains("cells_per_dim")) {
    c.cells_per_dim = io::count_or(j, "cells_per_dim", 8, p);
    if (*c.cells_per_dim == 0) throw ConfigError(p + ".cells_per_dim: must be positive");
  }
  const std::size_t cells = c.cells_per_dim.value_or(8);
  c.partition.tau = io::count_or(j, "tau", c.partition.tau, p);
  c.partition.samples_per_cell =
      io::count_or(j, "samples_per_cell", c.partition.samples_per_cell, p);
  if (c.partition.samples_per_cell < 2) {
    throw ConfigError(p + ".samples_per_cell: must be at least 2");
  }
  if (j.contains("box") && j.contains("boxes")) {
    throw ConfigError(p + ": give either 'box' or 'boxes', not both");
  }
  if (j.contains("box")) c.boxes = {state_box(j["box"], cells, p + ".box")};
  if (j.contains("boxes")) {
    if (!j["boxes"].is_array()) throw ConfigError(p + ".boxes: expected an array");
    for (std::size_t i = 0; i < j["boxes"].size(); ++i) {
      c.boxes.push_back(
          state_box(j["boxes"][i], cells, p + ".boxes[" + std::to_string(i) + "]"));
    }
  }
}

inline void synthesis(const json& j, RunConfig& c, const std::string& p) {
  io::check_keys(j, {"formulation", "tau0", "tau_i", "epsilon", "gamma_lower", "gamma_upper",
                     "gamma_rel_tol", "minimize_gamma", "max_gain", "gain_eta",
                     "condition_warning", "solver"},
                 p);
  auto& o = c.synthesis;
  const auto th = io::string_or(j, "formulation", "extended_dissipativity", p);
  if (th == "extended_dissipativity") {
    o.formulation = Formulation::kExtendedDissipativity;
  } else if (th == "disturbance_free") {
    o.formulation = Formulation::kDisturbanceFree;
  } else {
    throw ConfigError(p + ".formulation: expected 'extended_dissipativity' or 'disturbance_free'");
  }
  o.tau0 = io::number_or(j, "tau0", o.tau0, p);
  if (j.contains("tau_i")) o.tau_i = io::number_list(j["tau_i"], p + ".tau_i");
  o.epsilon = io::number_or(j, "epsilon", o.epsilon, p);
  o.gamma_lower = io::number_or(j, "gamma_lower", o.gamma_lower, p);
  o.gamma_upper = io::number_or(j, "gamma_upper", o.gamma_upper, p);
  o.gamma_rel_tol = io::number_or(j, "gamma_rel_tol", o.gamma_rel_tol, p);
  o.max_gain = io::number_or(j, "max_gain", o.max_gain, p);
  o.gain_eta = io::number_or(j, "gain_eta", o.gain_eta, p);
  o.condition_warning = io::number_or(j, "condition_warning", o.condition_warning, p);
  c.minimize_gamma = bool_or(j, "minimize_gamma", c.minimize_gamma, p);
  if (j.contains("solver")) {
    const auto& s = j["solver"];
    const std::string sp = p + ".solver";
    io::check_keys(s, {"radius", "mu", "max_outer", "max_newton", "margin_cap"}, sp);
    o.sdp.radius = positive_or(s, "radius", o.sdp.radius, sp);
    o.sdp.mu = io::number_or(s, "mu", o.sdp.mu, sp);
    if (!(o.sdp.mu > 1.0)) throw ConfigError(sp + ".mu: must exceed 1");
    o.sdp.margin_cap = positive_or(s, "margin_cap", o.sdp.margin_cap, sp);
    o.sdp.max_outer = static_cast<int>(io::count_or(s, "max_outer", o.sdp.max_outer, sp));
    o.sdp.max_newton = static_cast<int>(io::count_or(s, "max_newton", o.sdp.max_newton, sp));
  }
  // Subsystem count is unknown here; the length check on tau_i runs later.
  try {
    o.validate(o.tau_i.empty() ? 1 : o.tau_i.size());
  } catch (const InputError& e) {
    throw ConfigError(p + ": " + e.what());
  }
}

inline Signal signal(const json& j, const std::string& p) {
  io::check_keys(j, {"type", "a", "b", "c", "times", "values"}, p);
  const auto type = io::string_or(j, "type", "", p);
  if (type == "zero") return Signal::zero();
  if (type == "decaying_sinusoid") {
    return Signal::decaying_sinusoid(io::number_or(j, "a", 0.0, p),
                                     io::number_or(j, "b", 0.0, p),
                                     io::number_or(j, "c", 0.0, p));
  }
  if (type == "tabulated") {
    try {
      return Signal::tabulated(io::number_list(io::require(j, "times", p), p + ".times"),
                               io::number_list(io::require(j, "values", p), p + ".values"));
    } catch (const InputError& e) {
      throw ConfigError(p + ": " + e.what());
    }
  }
  throw ConfigError(p + ".type: unknown signal type '" + type + "'");
}

inline void simulation(const json& j, RunConfig& c, const fs::path& base,
                       const std::string& p) {
  io::check_keys(j, {"T", "dt", "divergence_bound", "initial_state", "disturbances", "gains"},
                 p);
  auto& s = c.simulation;
  s.options.T = positive_or(j, "T", s.options.T, p);
  s.options.dt = positive_or(j, "dt", s.options.dt, p);
  s.options.divergence_bound = positive_or(j, "divergence_bound", s.options.divergence_bound, p);
  if (s.options.dt > s.options.T) throw ConfigError(p + ".dt: must not exceed T");
  if (j.contains("initial_state")) {
    const auto& x = j["initial_state"];
    if (!x.is_array()) throw ConfigError(p + ".initial_state: expected an array per subsystem");
    for (std::size_t i = 0; i < x.size(); ++i) {
      const auto v = io::number_list(x[i], p + ".initial_state[" + std::to_string(i) + "]");
      s.initial_state.push_back(Eigen::Map<const Vector>(v.data(), static_cast<Index>(v.size())));
    }
  }
  if (j.contains("disturbances")) {
    const auto& d = j["disturbances"];
    if (!d.is_array()) throw ConfigError(p + ".disturbances: expected an array per subsystem");
    for (std::size_t i = 0; i < d.size(); ++i) {
      const std::string dp = p + ".disturbances[" + std::to_string(i) + "]";
      if (!d[i].is_array()) throw ConfigError(dp + ": expected an array of channels");
      std::vector<Signal> ch;
      for (std::size_t k = 0; k < d[i].size(); ++k) {
        ch.push_back(signal(d[i][k], dp + "[" + std::to_string(k) + "]"));
      }
      s.disturbances.push_back(std::move(ch));
    }
  }
  if (j.contains("gains")) {
    const auto& g = j["gains"];
    if (g.is_string()) {
      const auto path = resolve(base, g.get<std::string>());
      if (!fs::exists(path)) {
        throw ConfigError(p + ".gains: file '" + path.string() + "' does not exist");
      }
      s.gains_file = path;
    } else {
      s.gains = io::gains_from_json<ConfigError>(g, p + ".gains");
    }
  }
}

inline void verify(const json& j, RunConfig& c, const fs::path& base, const std::string& p) {
  io::check_keys(j, {"trajectory", "rho", "storage"}, p);
  const auto& t = io::require(j, "trajectory", p);
  if (!t.is_string()) throw ConfigError(p + ".trajectory: expected a file path");
  c.verify.trajectory = resolve(base, t.get<std::string>());
  if (!fs::exists(c.verify.trajectory)) {
    throw ConfigError(p + ".trajectory: file '" + c.verify.trajectory.string() +
                      "' does not exist");
  }
  if (j.contains("rho")) c.verify.rho = io::number_or(j, "rho", 0.0, p);
  if (j.contains("storage")) {
    c.verify.storage = io::number_or(j, "storage", 0.0, p);
    if (*c.verify.storage < 0.0) throw ConfigError(p + ".storage: must be nonnegative");
  }
  if (c.verify.rho && c.verify.storage) {
    throw ConfigError(p + ": give either 'rho' or 'storage', not both");
  }
}

inline void bench(const json& j, RunConfig& c, const std::string& p) {
  io::check_keys(j, {"name", "params", "cells_per_dim", "lyapunov_runs", "open_loop_horizon",
                     "disturbance_free_variant"},
                 p);
  auto& b = c.bench;
  b.name = io::string_or(j, "name", b.name, p);
  if (b.name != "pendulum") throw ConfigError(p + ".name: unknown benchmark '" + b.name + "'");
  if (j.contains("params")) b.params = pendulum_params(j["params"], p + ".params");
  b.cells_per_dim = io::count_or(j, "cells_per_dim", b.cells_per_dim, p);
  if (b.cells_per_dim == 0) throw ConfigError(p + ".cells_per_dim: must be positive");
  b.lyapunov_runs = io::count_or(j, "lyapunov_runs", b.lyapunov_runs, p);
  b.open_loop_horizon = positive_or(j, "open_loop_horizon", b.open_loop_horizon, p);
  b.disturbance_free_variant =
      bool_or(j, "disturbance_free_variant", b.disturbance_free_variant, p);
}

}  // namespace detail

// `base` resolves relative file paths (normally the config file's folder).
inline RunConfig parse_config(const json& j, const fs::path& base = ".") {
  const std::string p = "config";
  io::check_keys(j, {"command", "model", "performance", "partition", "synthesis", "simulation",
                     "verify", "bench", "output_dir", "seed"},
                 p);
  RunConfig c;
  c.command = command_from_string(io::string_or(j, "command", "bench", p),
                                          p + ".command");
  if (j.contains("model")) c.model = detail::model_source(j["model"], base, p + ".model");
  if (j.contains("performance")) c.performance = detail::performance(j["performance"], p + ".performance");
  if (j.contains("partition")) detail::partition(j["partition"], c, p + ".partition");
  if (j.contains("synthesis")) detail::synthesis(j["synthesis"], c, p + ".synthesis");
  if (j.contains("simulation")) detail::simulation(j["simulation"], c, base, p + ".simulation");
  if (j.contains("verify")) detail::verify(j["verify"], c, base, p + ".verify");
  if (j.contains("bench")) detail::bench(j["bench"], c, p + ".bench");
  c.output_dir = detail::resolve(base, io::string_or(j, "output_dir", "out", p));
  if (j.contains("seed")) {
    const auto& s = j["seed"];
    if (!s.is_number_unsigned()) throw ConfigError(p + ".seed: expected a nonnegative integer");
    c.seed = s.get<std::uint64_t>();
  }

  const bool needs_model = c.command == Command::kSynth || c.command == Command::kSimulate;
  if (needs_model && std::holds_alternative<std::monostate>(c.model)) {
    throw ConfigError(p + ": missing required field 'model' for command '" +
                      to_string(c.command) + "'");
  }
  if (c.command == Command::kVerify && c.verify.trajectory.empty()) {
    throw ConfigError(p + ": missing required field 'verify.trajectory'");
  }
  return c;
}

inline RunConfig parse_config(const fs::path& path) {
  const auto j = io::read_json(path);
  return parse_config(j, path.has_parent_path() ? path.parent_path() : fs::path("."));
}

// ---------------------------------------------------------------------------
// Execution

inline LargeScaleSystem load_model(const RunConfig& c) {
  if (const auto* b = std::get_if<BuiltinPendulum>(&c.model)) {
    return pendulum::build_system(b->params, b->disturbance);
  }
  if (const auto* path = std::get_if<fs::path>(&c.model)) {
    const auto j = io::read_json(*path);
    try {
      return io::model_from_json(j);
    } catch (const ConfigError& e) {
      throw InputError(e.what());
    }
  }
  throw ConfigError("config: no model given");
}

inline PerformanceSpec build_spec(const PerformanceConfig& p, Index nz, Index mw) {
  PerformanceSpec s;
  if (p.preset == "h_infinity") s = presets::h_infinity(p.gamma, nz, mw);
  else if (p.preset == "energy_to_peak") s = presets::energy_to_peak(p.gamma, nz, mw);
  else if (p.preset == "passivity") s = presets::passivity(p.gamma, nz, mw);
  else if (p.preset == "very_strict_passivity")
    s = presets::very_strict_passivity(p.epsilon, p.sigma, nz, mw);
  else if (p.preset == "qsr") s = presets::qsr(*p.q, *p.s, *p.r, p.alpha);
  else {
    s.phi = *p.phi;
    s.psi1 = *p.psi1;
    s.psi2 = *p.psi2;
    s.psi3 = *p.psi3;
    s.validate_shapes();
  }
  s.rho = p.rho;
  if (s.n_z() != nz || s.m_w() != mw) {
    throw InputError("performance matrices do not match the output/disturbance sizes");
  }
  return s;
}

inline FouPartition build_config_partition(const RunConfig& c, const LargeScaleSystem& sys) {
  std::vector<StateBox> boxes = c.boxes;
  if (boxes.empty()) {
    const auto* b = std::get_if<BuiltinPendulum>(&c.model);
    if (!b) throw ConfigError("config.partition: a box is required for file models");
    boxes = {pendulum::operating_box(b->params, c.cells_per_dim.value_or(8))};
  }
  if (boxes.size() == 1) return build_partition(sys, boxes.front(), c.partition);
  return build_partition(sys, boxes, c.partition);
}

inline json diagnostic(const std::string& command, int code, const std::string& kind,
                       const std::string& message,
                       const std::map<std::string, double>& details = {}) {
  json d = json::object();
  for (const auto& [k, v] : details) d[k] = v;
  return {{"command", command},
          {"exit_code", code},
          {"error", kind},
          {"message", message},
          {"details", d}};
}

inline int run_synth(const RunConfig& c, std::ostream& log) {
  const auto sys = load_model(c);
  const auto part = build_config_partition(c, sys);
  json out;
  SynthesisResult r;
  if (c.synthesis.formulation == Formulation::kDisturbanceFree) {
    r = synthesize_disturbance_free(sys, part, c.synthesis);
  } else if (c.minimize_gamma) {
    if (c.performance.preset != "h_infinity") {
      throw ConfigError("config.synthesis.minimize_gamma: needs the h_infinity preset");
    }
    auto g = minimize_gamma(sys, part, c.synthesis);
    out["bisection"] = io::bisection_to_json(g);
    r = std::move(g.result);
  } else {
    const auto& s0 = sys.subsystem(0);
    const auto spec = build_spec(c.performance, s0.n_z(), s0.m_w());
    out["performance"] = io::spec_to_json(spec);
    r = synthesize(sys, part, spec, c.synthesis);
  }
  out["result"] = io::synthesis_to_json(r);
  out["gains"] = io::gains_to_json(r.G);
  io::write_json(c.output_dir / "result.json", out);
  io::write_text(c.output_dir / "gains.csv", io::gains_to_csv(r.G));
  log << "synth: feasible";
  if (r.gamma) log << ", gamma = " << *r.gamma;
  log << "\n";
  return kOk;
}

inline int run_simulate(const RunConfig& c, std::ostream& log) {
  const auto sys = load_model(c);
  const auto& s = c.simulation;
  GainTable g = zero_gains(sys);
  if (s.gains) g = *s.gains;
  if (s.gains_file) {
    const auto j = io::read_json(*s.gains_file);
    if (!j.contains("gains")) {
      throw ConfigError("config.simulation.gains: '" + s.gains_file->string() +
                        "' has no 'gains' field");
    }
    g = io::gains_from_json<ConfigError>(j["gains"], s.gains_file->string() + ":gains");
  }
  check_gains(sys, g);
  std::vector<Vector> x0 = s.initial_state;
  if (x0.empty()) {
    for (const auto& sub : sys.subsystems()) x0.push_back(Vector::Zero(sub.n()));
  }
  DisturbanceSpec d = DisturbanceSpec::zero(sys);
  if (!s.disturbances.empty()) d.channels = s.disturbances;
  d.validate(sys);
  const auto tr = integrate(sys, g, x0, d, s.options);
  io::write_text(c.output_dir / "trajectory.csv", io::trajectory_to_csv(tr));
  const double final_norm = tr.state(tr.samples() - 1).norm();
  json summary = {{"samples", tr.samples()},
                  {"final_time", tr.t.back()},
                  {"final_norm", final_norm},
                  {"diverged", tr.diverged}};
  if (tr.diverged) summary["divergence_time"] = tr.divergence_time;
  io::write_json(c.output_dir / "simulation.json", summary);
  if (tr.diverged) {
    DivergenceError e("state norm exceeded the divergence bound at t = " +
                      std::to_string(tr.divergence_time));
    e.add_detail("divergence_time", tr.divergence_time);
    e.add_detail("divergence_bound", s.options.divergence_bound);
    throw e;
  }
  log << "simulate: final norm " << final_norm << "\n";
  return kOk;
}

inline int run_verify(const RunConfig& c, std::ostream& log) {
  const auto tr = io::trajectory_from_csv(io::read_text(c.verify.trajectory),
                                          c.verify.trajectory.string());
  if (tr.subsystems() == 0) throw InputError("verify: trajectory has no channels");
  const auto spec = build_spec(c.performance, tr.z[0].cols(), tr.w[0].cols());
  double rho = spec.rho;
  if (c.verify.rho) rho = *c.verify.rho;
  if (c.verify.storage) rho = -*c.verify.storage;
  const auto cert = certify(tr, spec, rho);
  io::write_json(c.output_dir / "certification.json",
                 {{"performance", io::spec_to_json(spec)},
                  {"certification", io::certification_to_json(cert)}});
  if (!cert.passed) {
    CertificationError e("dissipation inequality violated: min margin " +
                         std::to_string(cert.min_margin) + " below rho " + std::to_string(rho));
    e.add_detail("min_margin", cert.min_margin);
    e.add_detail("min_time", cert.min_time);
    e.add_detail("rho", rho);
    throw e;
  }
  log << "verify: passed, min margin " << cert.min_margin << "\n";
  return kOk;
}

inline pendulum::BenchOptions bench_options(const RunConfig& c) {
  pendulum::BenchOptions o;
  o.params = c.bench.params;
  o.cells_per_dim = c.bench.cells_per_dim;
  o.partition = c.partition;
  o.synthesis = c.synthesis;
  o.simulation = c.simulation.options;
  o.open_loop_horizon = c.bench.open_loop_horizon;
  o.seed = c.seed;
  o.lyapunov_runs = c.bench.lyapunov_runs;
  o.disturbance_free_variant = c.bench.disturbance_free_variant;
  if (!c.simulation.initial_state.empty()) o.x0 = c.simulation.initial_state;
  return o;
}

inline int run_bench(const RunConfig& c, std::ostream& log) {
  const auto b = pendulum::run_benchmark_scenario(bench_options(c));
  pendulum::write_artifacts(b, c.output_dir);
  log << "bench pendulum: gamma_min = " << b.gamma.gamma_min << " (reference "
      << pendulum::kReferenceGamma << "), closed-loop |x(T)| = " << b.closed_loop_final
      << "\n";
  return kOk;
}

// Runs one command. Every failure writes diagnostic.json to the output
// directory and maps to a distinct exit code.
inline int run(const RunConfig& c, std::ostream& log = std::cout,
               std::ostream& err = std::cerr) {
  const std::string cmd = to_string(c.command);
  auto fail = [&](int code, const std::string& kind, const std::string& msg,
                  const std::map<std::string, double>& details) {
    err << cmd << ": " << msg << "\n";
    try {
      io::write_json(c.output_dir / "diagnostic.json", diagnostic(cmd, code, kind, msg, details));
    } catch (const std::exception& e) {
      err << "could not write diagnostic: " << e.what() << "\n";
    }
    return code;
  };
  try {
    switch (c.command) {
      case Command::kSynth: return run_synth(c, log);
      case Command::kSimulate: return run_simulate(c, log);
      case Command::kVerify: return run_verify(c, log);
      case Command::kBench: return run_bench(c, log);
    }
    return kInternal;
  } catch (const Error& e) {
    return fail(exit_code_for(e), e.code(), e.what(), e.details());
  } catch (const std::exception& e) {
    return fail(kInternal, "internal", e.what(), {});
  }
}

}  // namespace it2lss::cli
