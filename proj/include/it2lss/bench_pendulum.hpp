#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "it2lss/errors.hpp"
#include "it2lss/fou_partition.hpp"
#include "it2lss/dissipativity.hpp"
#include "it2lss/fuzzy_model.hpp"
#include "it2lss/io.hpp"
#include "it2lss/linalg.hpp"
#include "it2lss/simulate.hpp"
#include "it2lss/synthesis.hpp"

namespace it2lss::pendulum {

struct PendulumParams {
  double m1 = 2.0;
  double m2 = 2.5;
  double J1 = 2.0;
  double J2 = 2.5;
  double k = 8.0;
  double r = 1.0;
  double g = 9.8;
  double r_deg = 88.0;         // linearization angle
  double fou_height = 0.8;     // lower MF = fou_height · upper MF
  double velocity_bound = 10.0;  // |x_i2| bound of the operating box

  double r_rad() const { return r_deg * std::numbers::pi / 180.0; }

  void validate() const {
    for (double v : {m1, m2, J1, J2, k, r, g, r_deg, velocity_bound}) {
      if (!(v > 0.0) || !std::isfinite(v)) {
        throw InputError("pendulum parameters must be positive and finite");
      }
    }
    if (!(fou_height > 0.0 && fou_height <= 1.0)) {
      throw InputError("pendulum fou_height must lie in (0, 1]");
    }
  }
};

// Rule 1 is "near the origin", rule 2 "near ±r_i"; each lower MF is the
// upper MF scaled by fou_height.
struct MembershipSets {
  IT2Set near_zero;
  IT2Set near_edge;
};

inline MembershipSets default_membership(const PendulumParams& p) {
  p.validate();
  const double r = p.r_rad();
  const double h = p.fou_height;
  auto tri = [&](double height) { return MembershipFn::triangular(-r, 0.0, r, height); };
  auto vee = [&](double height) {
    return MembershipFn::tabulated({-r, 0.0, r}, {1.0, 0.0, 1.0}, height);
  };
  return {IT2Set(tri(h), tri(1.0)), IT2Set(vee(h), vee(1.0))};
}

inline Matrix rule_a(double a21) {
  Matrix a(2, 2);
  a << 0.0, 1.0, a21, 0.0;
  return a;
}

inline Matrix coupling(double v) {
  Matrix a = Matrix::Zero(2, 2);
  a(1, 0) = v;
  return a;
}

// Linearized rule matrices are fixed benchmark constants; they are not
// recomputed from the physical parameters.
inline LargeScaleSystem build_system(const PendulumParams& p = {},
                                     bool with_disturbance = true) {
  const auto sets = default_membership(p);
  Matrix b(2, 1);
  b << 0.0, 0.5;
  const Matrix d1 = with_disturbance ? b : Matrix(Matrix::Zero(2, 1));
  Matrix c(1, 2);
  c << 1.0, 1.0;
  const Matrix d2 = Matrix::Zero(1, 1);

  const double a_lin[2][2] = {{8.81, 5.38}, {9.01, 5.58}};
  const double a_bar[2] = {0.25, 0.20};

  std::vector<Subsystem> subs;
  std::vector<ControllerRuleBase> ctrls;
  for (std::size_t i = 0; i < 2; ++i) {
    const std::size_t other = 1 - i;
    std::vector<PlantRule> rules;
    for (std::size_t l = 0; l < 2; ++l) {
      PlantRule rule;
      rule.A = rule_a(a_lin[i][l]);
      rule.B = b;
      rule.D1 = d1;
      rule.C = c;
      rule.D2 = d2;
      rule.interconnections[other] = coupling(a_bar[i]);
      rule.antecedents.push_back({0, l == 0 ? sets.near_zero : sets.near_edge});
      rules.push_back(std::move(rule));
    }
    subs.emplace_back(i, 2, 1, 1, 1, std::move(rules));
    ctrls.emplace_back(std::vector<ControllerRule>{
        ControllerRule{{Antecedent{0, sets.near_zero}}},
        ControllerRule{{Antecedent{0, sets.near_edge}}}});
  }
  return LargeScaleSystem(std::move(subs), std::move(ctrls));
}

inline StateBox operating_box(const PendulumParams& p, std::size_t cells_per_dim = 8) {
  const double r = p.r_rad();
  StateBox box;
  box.lower = {-r, -p.velocity_bound};
  box.upper = {r, p.velocity_bound};
  box.cells_per_dim = {cells_per_dim, cells_per_dim};
  box.validate();
  return box;
}

// Benchmark reference gains [i][j] (row vectors), for comparison only.
inline std::vector<std::vector<Matrix>> reference_gains() {
  auto row = [](double a, double b) {
    Matrix m(1, 2);
    m << a, b;
    return m;
  };
  return {{row(-34.3381, -16.2743), row(-60.0235, -31.7905)},
          {row(-174.0191, -93.5045), row(-485.0611, -268.4191)}};
}

inline constexpr double kReferenceGamma = 0.333;

// ---------------------------------------------------------------------------
// Scenario

struct BenchOptions {
  PendulumParams params;
  std::size_t cells_per_dim = 8;
  PartitionOptions partition;
  SynthesisOptions synthesis;
  IntegrateOptions simulation;  // closed-loop runs
  double open_loop_horizon = 5.0;
  std::uint64_t seed = 42;
  std::size_t lyapunov_runs = 20;
  bool disturbance_free_variant = true;
  std::vector<Vector> x0 = {Vector{{1.2, 0.0}}, Vector{{0.8, 0.0}}};
  double w_amplitude[2] = {0.8, 0.6};
  double w_decay = 0.2;
  double w_frequency = 0.2;
};

inline DisturbanceSpec scenario_disturbance(const BenchOptions& o) {
  DisturbanceSpec d;
  for (double a : o.w_amplitude) {
    d.channels.push_back({Signal::decaying_sinusoid(a, o.w_decay, o.w_frequency)});
  }
  return d;
}

// Uniform draws in the operating box from a 64-bit Mersenne twister, mapped
// by hand so the states do not depend on the standard library's distributions.
inline std::vector<std::vector<Vector>> random_states(const StateBox& box,
                                                      std::size_t n_sub,
                                                      std::size_t count,
                                                      std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto unit = [&rng] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
  std::vector<std::vector<Vector>> out;
  for (std::size_t k = 0; k < count; ++k) {
    std::vector<Vector> x;
    for (std::size_t i = 0; i < n_sub; ++i) {
      Vector xi(static_cast<Index>(box.lower.size()));
      for (std::size_t r = 0; r < box.lower.size(); ++r) {
        xi(static_cast<Index>(r)) = box.lower[r] + (box.upper[r] - box.lower[r]) * unit();
      }
      x.push_back(std::move(xi));
    }
    out.push_back(std::move(x));
  }
  return out;
}

struct LyapunovSummary {
  std::size_t runs = 0;
  std::size_t violations = 0;  // runs with some V[s] >= V[s-1]
  double worst_step_ratio = 0.0;  // max over runs and samples of V[s]/V[s-1]
  double max_final_ratio = 0.0;  // max over runs of V(T)/V(0)
  bool diverged = false;
};

inline LyapunovSummary lyapunov_check(const LargeScaleSystem& sys, const GainTable& g,
                                      const std::vector<Matrix>& x_mats,
                                      const std::vector<std::vector<Vector>>& starts,
                                      const IntegrateOptions& sim) {
  LyapunovSummary s;
  for (const auto& x0 : starts) {
    const auto tr = integrate(sys, g, x0, DisturbanceSpec::zero(sys), sim);
    const auto v = lyapunov_trace(tr, x_mats);
    ++s.runs;
    s.diverged = s.diverged || tr.diverged;
    bool ok = !tr.diverged;
    for (std::size_t k = 1; k < v.size(); ++k) {
      if (!(v[k] < v[k - 1])) ok = false;
      if (v[k - 1] > 0.0) s.worst_step_ratio = std::max(s.worst_step_ratio, v[k] / v[k - 1]);
    }
    if (!ok) ++s.violations;
    if (!v.empty() && v.front() > 0.0) {
      s.max_final_ratio = std::max(s.max_final_ratio, v.back() / v.front());
    }
  }
  return s;
}

inline nlohmann::json to_json(const LyapunovSummary& s) {
  return {{"runs", s.runs},
          {"violations", s.violations},
          {"worst_step_ratio", s.worst_step_ratio},
          {"max_final_ratio", s.max_final_ratio},
          {"diverged", s.diverged},
          {"strictly_decreasing", s.violations == 0 && !s.diverged}};
}

struct BenchResult {
  nlohmann::json report;
  nlohmann::json timings;
  GammaResult gamma;
  std::optional<SynthesisResult> disturbance_free;
  Trajectory open_loop, closed_loop, from_rest;
  double open_loop_growth = 0.0;   // ‖x(T_open)‖ / ‖x(0)‖
  double closed_loop_final = 0.0;  // ‖x(T)‖
  double attenuation = 0.0;
  Certification cert_zero, cert_storage;
  LyapunovSummary lyapunov, lyapunov_disturbance_free;
  EnvelopeAudit envelope;
};

inline double state_norm(const Trajectory& tr, std::size_t k) { return tr.state(k).norm(); }

inline BenchResult run_benchmark_scenario(const BenchOptions& o = {}) {
  using clock = std::chrono::steady_clock;
  auto seconds = [](clock::time_point a) {
    return std::chrono::duration<double>(clock::now() - a).count();
  };
  const auto t_start = clock::now();
  o.params.validate();
  const auto sys = build_system(o.params, true);
  const auto box = operating_box(o.params, o.cells_per_dim);
  const auto part = build_partition(sys, box, o.partition);

  BenchResult b;
  b.envelope = audit_envelope(sys, part, 10);

  IntegrateOptions open = o.simulation;
  open.T = o.open_loop_horizon;
  b.open_loop = integrate(sys, zero_gains(sys), o.x0, DisturbanceSpec::zero(sys), open);
  const double x0_norm = state_norm(b.open_loop, 0);
  b.open_loop_growth = state_norm(b.open_loop, b.open_loop.samples() - 1) / x0_norm;

  const auto t_syn = clock::now();
  b.gamma = minimize_gamma(sys, part, o.synthesis);
  const double syn_seconds = seconds(t_syn);
  const auto& res = b.gamma.result;

  const auto dist = scenario_disturbance(o);
  b.closed_loop = integrate(sys, res.G, o.x0, dist, o.simulation);
  b.closed_loop_final = state_norm(b.closed_loop, b.closed_loop.samples() - 1);
  std::vector<Vector> rest;
  for (const auto& x : o.x0) rest.push_back(Vector::Zero(x.size()));
  b.from_rest = integrate(sys, res.G, rest, dist, o.simulation);
  b.attenuation = attenuation_ratio(b.from_rest);

  const auto spec = presets::h_infinity(b.gamma.gamma_min, 1, 1);
  const double v0 = lyapunov_trace(b.closed_loop, res.X).front();
  b.cert_zero = certify(b.closed_loop, spec, 0.0);
  b.cert_storage = certify(b.closed_loop, spec, -v0);
  const auto cert_rest = certify(b.from_rest, spec, 0.0);

  const auto starts = random_states(box, sys.size(), o.lyapunov_runs, o.seed);
  b.lyapunov = lyapunov_check(sys, res.G, res.X, starts, o.simulation);

  nlohmann::json df = nullptr;
  double df_seconds = 0.0;
  if (o.disturbance_free_variant) {
    const auto sys0 = build_system(o.params, false);
    const auto part0 = build_partition(sys0, box, o.partition);
    SynthesisOptions so = o.synthesis;
    so.formulation = Formulation::kDisturbanceFree;
    const auto t_df = clock::now();
    b.disturbance_free = synthesize_disturbance_free(sys0, part0, so);
    df_seconds = seconds(t_df);
    b.lyapunov_disturbance_free =
        lyapunov_check(sys0, b.disturbance_free->G, b.disturbance_free->X, starts, o.simulation);
    df = {{"synthesis", io::synthesis_to_json(*b.disturbance_free)},
          {"lyapunov", to_json(b.lyapunov_disturbance_free)}};
  }

  const auto& p = o.params;
  nlohmann::json params = {{"m1", p.m1}, {"m2", p.m2}, {"J1", p.J1}, {"J2", p.J2},
                           {"k", p.k}, {"r", p.r}, {"g", p.g}, {"r_deg", p.r_deg},
                           {"fou_height", p.fou_height},
                           {"velocity_bound", p.velocity_bound}};
  const auto& so = o.synthesis;
  nlohmann::json relax = {{"cells_per_dim", o.cells_per_dim},
                          {"tau", o.partition.tau},
                          {"samples_per_cell", o.partition.samples_per_cell},
                          {"tau0", so.tau0},
                          {"tau_i", so.tau_i},
                          {"epsilon", so.epsilon},
                          {"gamma_bracket", {so.gamma_lower, so.gamma_upper}},
                          {"gamma_rel_tol", so.gamma_rel_tol},
                          {"max_gain", so.max_gain},
                          {"gain_eta", so.gain_eta},
                          {"solver_radius", so.sdp.radius}};
  const auto ref = reference_gains();
  nlohmann::json gains = nlohmann::json::array();
  for (std::size_t i = 0; i < res.G.size(); ++i) {
    for (std::size_t j = 0; j < res.G[i].size(); ++j) {
      gains.push_back({{"subsystem", i + 1},
                       {"rule", j + 1},
                       {"synthesized", io::to_json(res.G[i][j])},
                       {"reference", io::to_json(ref[i][j])}});
    }
  }

  b.report = {
      {"benchmark", "double_inverted_pendulum"},
      {"seed", o.seed},
      {"parameters", params},
      {"relaxation", relax},
      {"type_reduction", {{"alpha_lower", 0.5}, {"alpha_upper", 0.5},
                          {"beta_lower", 0.5}, {"beta_upper", 0.5}}},
      {"envelope_audit", {{"samples", b.envelope.samples}, {"min_margin", b.envelope.min_margin}}},
      {"open_loop",
       {{"horizon", open.T},
        {"x0_norm", x0_norm},
        {"final_norm", state_norm(b.open_loop, b.open_loop.samples() - 1)},
        {"growth", b.open_loop_growth},
        {"diverged", b.open_loop.diverged}}},
      {"gamma",
       {{"gamma_min", b.gamma.gamma_min},
        {"reference", kReferenceGamma},
        {"bisection", io::bisection_to_json(b.gamma)}}},
      {"gains", gains},
      {"synthesis", io::synthesis_to_json(res)},
      {"closed_loop",
       {{"horizon", o.simulation.T},
        {"final_norm", b.closed_loop_final},
        {"diverged", b.closed_loop.diverged}}},
      {"attenuation",
       {{"ratio", b.attenuation},
        {"gamma_min", b.gamma.gamma_min},
        {"within_gamma", b.attenuation <= b.gamma.gamma_min * (1.0 + 1e-3)}}},
      {"certification",
       {{"spec", io::spec_to_json(spec)},
        {"storage_at_x0", v0},
        {"closed_loop_rho_zero", io::certification_to_json(b.cert_zero)},
        {"closed_loop_rho_storage", io::certification_to_json(b.cert_storage)},
        {"from_rest_rho_zero", io::certification_to_json(cert_rest)}}},
      {"lyapunov", to_json(b.lyapunov)},
      {"disturbance_free", df}};
  b.timings = {{"synthesis_seconds", syn_seconds},
               {"disturbance_free_seconds", df_seconds},
               {"total_seconds", seconds(t_start)}};
  return b;
}

// report.json, timings.json, gains.csv and the three trajectory CSVs.
inline void write_artifacts(const BenchResult& b, const std::filesystem::path& dir) {
  io::write_json(dir / "report.json", b.report);
  io::write_json(dir / "timings.json", b.timings);
  io::write_text(dir / "gains.csv", io::gains_to_csv(b.gamma.result.G));
  io::write_text(dir / "open_loop.csv", io::trajectory_to_csv(b.open_loop));
  io::write_text(dir / "closed_loop.csv", io::trajectory_to_csv(b.closed_loop));
  io::write_text(dir / "from_rest.csv", io::trajectory_to_csv(b.from_rest));
}

}  // namespace it2lss::pendulum
