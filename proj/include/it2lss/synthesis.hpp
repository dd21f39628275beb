#pragma once

#include <chrono>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "it2lss/dissipativity.hpp"
#include "it2lss/errors.hpp"
#include "it2lss/fou_partition.hpp"
#include "it2lss/fuzzy_model.hpp"
#include "it2lss/linalg.hpp"
#include "it2lss/lmi/affine.hpp"
#include "it2lss/lmi/sdp.hpp"
#include "it2lss/simulate.hpp"

namespace it2lss {

enum class Formulation { kExtendedDissipativity, kDisturbanceFree };

inline const char* to_string(Formulation t) {
  return t == Formulation::kExtendedDissipativity ? "extended-dissipativity"
                                                  : "disturbance-free";
}

struct SynthesisOptions {
  Formulation formulation = Formulation::kExtendedDissipativity;
  double tau0 = 1.0;
  std::vector<double> tau_i;  // empty: every subsystem uses tau0
  double epsilon = 1e-6;      // relative strictness margin
  double gamma_lower = 1e-3;
  double gamma_upper = 1e3;
  double gamma_rel_tol = 1e-2;
  double condition_warning = 1e12;
  // Optional bound ‖G_ij‖₂ ≤ max_gain, enforced through X ⪰ ηI and
  // [[X, Nᵀ], [N, η·max_gain²·I]] ⪰ 0. Zero disables it.
  double max_gain = 500.0;
  double gain_eta = 0.1;
  lmi::SdpOptions sdp;

  double tau(std::size_t i) const {
    return tau_i.empty() ? tau0 : tau_i.at(i);
  }

  void validate(std::size_t n_sub) const {
    if (!(tau0 > 0.0)) throw InputError("tau0 must be positive");
    if (!tau_i.empty() && tau_i.size() != n_sub) {
      throw InputError("tau_i needs one entry per subsystem");
    }
    for (double t : tau_i) {
      if (!(t >= tau0)) {
        throw InputError("every tau_i must be at least tau0");
      }
    }
    if (!(epsilon > 0.0)) throw InputError("epsilon must be positive");
    if (!(gamma_lower > 0.0) || !(gamma_lower < gamma_upper)) {
      throw InputError("gamma bracket must satisfy 0 < lower < upper");
    }
    if (!(gamma_rel_tol > 0.0)) throw InputError("gamma tolerance must be positive");
    if (!(max_gain >= 0.0)) throw InputError("max_gain must be nonnegative");
    if (max_gain > 0.0 && !(gain_eta > 0.0)) {
      throw InputError("gain_eta must be positive");
    }
  }
};

// Largest spectral norm over the rules of subsystem k of the matrix that
// multiplies x_i in subsystem k's dynamics. Zero when there is no coupling.
inline double interconnection_bound(const LargeScaleSystem& sys, std::size_t k,
                                    std::size_t i) {
  if (k >= sys.size() || i >= sys.size()) {
    throw InputError("interconnection_bound: subsystem index out of range");
  }
  if (k == i) return 0.0;
  double best = 0.0;
  for (const auto& rule : sys.subsystem(k).rules()) {
    auto it = rule.interconnections.find(i);
    if (it != rule.interconnections.end()) {
      best = std::max(best, spectral_norm(it->second));
    }
  }
  return best;
}

// (N − 1)/τ₀ · Σ_{k≠i} ā_ki².
inline double coupling_coefficient(const LargeScaleSystem& sys, std::size_t i,
                                   double tau0) {
  double acc = 0.0;
  for (std::size_t k = 0; k < sys.size(); ++k) {
    if (k == i) continue;
    const double a = interconnection_bound(sys, k, i);
    acc += a * a;
  }
  return static_cast<double>(sys.size() - 1) / tau0 * acc;
}

struct SubsystemVars {
  lmi::VarId X = 0;
  std::optional<lmi::VarId> K;
  lmi::VarId M = 0;
  std::vector<lmi::VarId> N;  // per controller rule j
  std::vector<lmi::VarId> W;  // flat (l·c + j)·bands + z
  std::size_t c = 0;
  std::size_t bands = 1;

  lmi::VarId w_at(std::size_t l, std::size_t j, std::size_t z) const {
    return W.at((l * c + j) * bands + z);
  }
};

enum class QuadRole { kInterconnection, kOutput };

struct OmegaQuad {
  lmi::QuadTerm term;
  QuadRole role = QuadRole::kInterconnection;
};

// Ω̃ = base + Σ ρ⁻¹ LᵀL for one (i, l, j). The quadratic parts are positive
// semidefinite and kept apart so callers can either drop or lift them.
struct OmegaTerms {
  lmi::AffineBlockMatrix base;
  std::vector<OmegaQuad> quads;
};

// Builds Ω̃_ilj in coordinates ζ = [P_i x_i; ω_i] (or P_i x_i alone when
// perf is absent). Every variable is in X = P⁻¹, N = G X form.
inline OmegaTerms build_omega(const LargeScaleSystem& sys, std::size_t i,
                              std::size_t l, std::size_t j,
                              const SubsystemVars& v,
                              const PerformanceSpec* perf, double tau_i,
                              double coupling) {
  const auto& sub = sys.subsystem(i);
  const auto& r = sub.rule(l);
  const Index n = sub.n();
  const Matrix in = Matrix::Identity(n, n);
  const Index mw = perf ? sub.m_w() : 0;
  OmegaTerms o;
  o.base = perf ? lmi::AffineBlockMatrix({n, mw}) : lmi::AffineBlockMatrix({n});
  o.base.add_he(0, r.A, v.X, in);
  o.base.add_he(0, r.B, v.N.at(j), in);
  o.base.add_constant(0, 0, tau_i * in);

  Matrix sel = Matrix::Zero(n, n + mw);
  sel.leftCols(n) = in;
  if (coupling > 0.0) {
    lmi::AffineRect f(n, n + mw);
    f.add_term(in, v.X, sel);
    o.quads.push_back({{std::move(f), 1.0 / coupling}, QuadRole::kInterconnection});
  }
  if (!perf) return o;

  o.base.add_constant(0, 1, r.D1);
  o.base.add_term(0, 1, in, v.X, -r.C.transpose() * perf->psi2);
  o.base.add_constant(1, 1,
                      Matrix(-he(r.D2.transpose() * perf->psi2) - perf->psi3));
  const Matrix fpsi = psd_factor(Matrix(-0.5 * he(perf->psi1)));
  if (fpsi.rows() > 0) {
    lmi::AffineRect f(fpsi.rows(), n + mw);
    Matrix cst = Matrix::Zero(fpsi.rows(), n + mw);
    cst.rightCols(mw) = fpsi * r.D2;
    f.add_constant(cst);
    f.add_term(fpsi * r.C, v.X, sel);
    o.quads.push_back({{std::move(f), 1.0}, QuadRole::kOutput});
  }
  return o;
}

inline std::vector<lmi::QuadTerm> quad_terms(const OmegaTerms& o) {
  std::vector<lmi::QuadTerm> q;
  for (const auto& t : o.quads) q.push_back(t.term);
  return q;
}

struct FamilyTally {
  std::map<std::string, std::size_t> constraints;
  std::size_t symmetric_vars = 0;
  std::size_t rectangular_vars = 0;
  std::size_t scalars = 0;

  std::size_t total_constraints() const {
    std::size_t s = 0;
    for (const auto& [k, v] : constraints) s += v;
    return s;
  }
};

// Constraint families, in emission order.
namespace family {
inline constexpr const char* kSlackPositive = "slack_positive";
inline constexpr const char* kRelaxedPositive = "relaxed_positive";
inline constexpr const char* kVertexNegative = "vertex_negative";
inline constexpr const char* kTheta2 = "theta2";
inline constexpr const char* kTheta1 = "theta1";
inline constexpr const char* kXPositive = "x_positive";
inline constexpr const char* kXLower = "x_lower";
inline constexpr const char* kGainBound = "gain_bound";
}  // namespace family

struct Assembly {
  Formulation formulation = Formulation::kExtendedDissipativity;
  lmi::VarRegistry registry;
  std::vector<lmi::Constraint> constraints;
  std::vector<SubsystemVars> vars;
  std::vector<std::vector<double>> abar;  // abar[k][i]
  std::vector<double> coupling;           // per subsystem
  std::vector<double> tau;                // per subsystem
  // ζ-space congruence applied to every ζ-sized block; W and M are declared
  // in the transformed coordinates.
  std::vector<Matrix> zeta_scale;
  FamilyTally tally;
  std::optional<PerformanceSpec> perf;
};

namespace detail {

inline std::string idx(std::initializer_list<std::size_t> ids) {
  std::string s;
  for (auto it = ids.begin(); it != ids.end(); ++it) {
    s += (it == ids.begin() ? "" : "_") + std::to_string(*it + 1);
  }
  return s;
}

inline void check_partition(const LargeScaleSystem& sys, const FouPartition& part) {
  if (part.subsystems.size() != sys.size()) {
    throw InputError("partition covers " + std::to_string(part.subsystems.size()) +
                     " subsystems, system has " + std::to_string(sys.size()));
  }
  for (std::size_t i = 0; i < sys.size(); ++i) {
    const auto& sp = part.at(i);
    if (sp.p() != sys.subsystem(i).p() || sp.c() != sys.controller(i).c() ||
        sp.box().dims() != sys.subsystem(i).n()) {
      throw InputError("partition of subsystem " + std::to_string(i) +
                       " does not match the system");
    }
  }
}

inline void push(Assembly& a, lmi::AffineBlockMatrix m, lmi::Sense sense,
                 const char* fam, std::string label, double eps) {
  a.constraints.push_back(
      lmi::make_constraint(std::move(m), sense, fam, std::move(label), eps));
  ++a.tally.constraints[fam];
}

// Adds weight·V to a square affine matrix whose size equals V's.
inline void add_full_symmetric(lmi::AffineBlockMatrix& m, double weight,
                               lmi::VarId var) {
  const Index s = m.size();
  m.add_full_half(0.5 * weight * Matrix::Identity(s, s), var,
                  Matrix::Identity(s, s));
}

inline Assembly assemble(const LargeScaleSystem& sys, const FouPartition& part,
                         const PerformanceSpec* perf, const SynthesisOptions& opts) {
  opts.validate(sys.size());
  check_partition(sys, part);
  Assembly a;
  a.formulation = perf ? Formulation::kExtendedDissipativity
                   : Formulation::kDisturbanceFree;
  if (perf) a.perf = *perf;
  const std::size_t n_sub = sys.size();
  const std::size_t bands = part.tau() + 1;
  const double eps = opts.epsilon;

  a.abar.assign(n_sub, std::vector<double>(n_sub, 0.0));
  for (std::size_t k = 0; k < n_sub; ++k) {
    for (std::size_t i = 0; i < n_sub; ++i) a.abar[k][i] = interconnection_bound(sys, k, i);
  }

  // Variables.
  for (std::size_t i = 0; i < n_sub; ++i) {
    const auto& sub = sys.subsystem(i);
    const Index n = sub.n();
    const Index zeta = perf ? n + sub.m_w() : n;
    SubsystemVars v;
    v.c = sys.controller(i).c();
    v.bands = bands;
    v.X = a.registry.declare_symmetric("X_" + idx({i}), n, {int(i)});
    if (perf) v.K = a.registry.declare_symmetric("K_" + idx({i}), n, {int(i)});
    v.M = a.registry.declare_symmetric("M_" + idx({i}), zeta, {int(i)});
    for (std::size_t j = 0; j < v.c; ++j) {
      v.N.push_back(a.registry.declare_rectangular("N_" + idx({i, j}), sub.m(), n,
                                                   {int(i), int(j)}));
    }
    for (std::size_t l = 0; l < sub.p(); ++l) {
      for (std::size_t j = 0; j < v.c; ++j) {
        for (std::size_t z = 0; z < bands; ++z) {
          v.W.push_back(a.registry.declare_symmetric(
              "W_" + idx({i, l, j, z}), zeta, {int(i), int(l), int(j), int(z)}));
        }
      }
    }
    a.vars.push_back(std::move(v));
    a.coupling.push_back(coupling_coefficient(sys, i, opts.tau0));
    a.tau.push_back(opts.tau(i));
  }
  for (const auto& var : a.registry.vars()) {
    if (var.kind == lmi::VarKind::kSymmetric) {
      ++a.tally.symmetric_vars;
    } else {
      ++a.tally.rectangular_vars;
    }
    a.tally.scalars += static_cast<std::size_t>(var.scalar_count());
  }

  for (std::size_t i = 0; i < n_sub; ++i) {
    const auto& sub = sys.subsystem(i);
    const auto& sp = part.at(i);
    const auto& v = a.vars[i];
    const Index n = sub.n();
    const Matrix in = Matrix::Identity(n, n);
    const std::size_t p = sub.p();
    const std::size_t c = v.c;

    std::vector<OmegaTerms> omega;
    for (std::size_t l = 0; l < p; ++l) {
      for (std::size_t j = 0; j < c; ++j) {
        omega.push_back(build_omega(sys, i, l, j, v, perf, a.tau[i], a.coupling[i]));
      }
    }
    // diag(I, σI) with σ = 1/√max(1, ‖ψ₃‖) keeps the disturbance block O(1).
    const Index zeta = omega.front().base.size();
    Matrix tz = Matrix::Identity(zeta, zeta);
    if (perf) {
      const double sigma = 1.0 / std::sqrt(std::max(1.0, spectral_norm(perf->psi3)));
      tz.bottomRightCorner(zeta - n, zeta - n) *= sigma;
    }
    for (auto& o : omega) {
      o.base = lmi::congruence(o.base, tz);
      for (auto& q : o.quads) q.term = lmi::congruence(q.term, tz);
    }
    a.zeta_scale.push_back(tz);
    const auto block_sizes = omega.front().base.block_sizes();

    // W ≻ 0.
    for (std::size_t l = 0; l < p; ++l) {
      for (std::size_t j = 0; j < c; ++j) {
        for (std::size_t z = 0; z < bands; ++z) {
          lmi::AffineBlockMatrix m(block_sizes);
          add_full_symmetric(m, 1.0, v.w_at(l, j, z));
          push(a, std::move(m), lmi::Sense::kPositive, family::kSlackPositive,
               std::string(family::kSlackPositive) + "[" + idx({i, l, j, z}) + "]",
               eps);
        }
      }
    }
    // Ω + W + M ≻ 0 with the PSD quadratic parts of Ω̃ dropped.
    for (std::size_t l = 0; l < p; ++l) {
      for (std::size_t j = 0; j < c; ++j) {
        for (std::size_t z = 0; z < bands; ++z) {
          lmi::AffineBlockMatrix m = omega[l * c + j].base;
          add_full_symmetric(m, 1.0, v.w_at(l, j, z));
          add_full_symmetric(m, 1.0, v.M);
          push(a, std::move(m), lmi::Sense::kPositive, family::kRelaxedPositive,
               std::string(family::kRelaxedPositive) + "[" + idx({i, l, j, z}) + "]",
               eps);
        }
      }
    }
    // Σ_lj [δ̄(Ω̃ + M) + (δ̄ − δ̲)W] − M ≺ 0 at every corner, cell and band.
    for (std::size_t k = 0; k < sp.q(); ++k) {
      for (std::size_t corner = 0; corner < sp.corners(); ++corner) {
        for (std::size_t z = 0; z < bands; ++z) {
          lmi::AffineBlockMatrix m(block_sizes);
          double total = 0.0;
          std::vector<double> per_rule(p, 0.0);
          for (std::size_t l = 0; l < p; ++l) {
            for (std::size_t j = 0; j < c; ++j) {
              const double hi = sp.delta_upper(l, j, corner, k, z);
              const double lo = sp.delta_lower(l, j, corner, k, z);
              if (hi > 0.0) m += hi * omega[l * c + j].base;
              if (hi - lo > 0.0) add_full_symmetric(m, hi - lo, v.w_at(l, j, z));
              total += hi;
              per_rule[l] += hi;
            }
          }
          add_full_symmetric(m, total - 1.0, v.M);
          std::vector<lmi::QuadTerm> quads;
          for (std::size_t l = 0; l < p; ++l) {
            for (const auto& q : omega[l * c].quads) {
              if (q.role == QuadRole::kInterconnection) {
                if (l == 0 && total > 0.0) {
                  quads.push_back({q.term.factor, q.term.weight / total});
                }
              } else if (per_rule[l] > 0.0) {
                quads.push_back({q.term.factor, q.term.weight / per_rule[l]});
              }
            }
          }
          push(a, lmi::schur_linearize(m, quads), lmi::Sense::kNegative,
               family::kVertexNegative,
               std::string(family::kVertexNegative) + "[i=" + std::to_string(i + 1) +
                   ",cell=" + std::to_string(k) + ",corner=" +
                   std::to_string(corner) + ",z=" + std::to_string(z + 1) + "]",
               eps);
        }
      }
    }

    if (perf) {
      // Θ₂ per distinct output matrix, Θ₁ once.
      const Matrix fphi = psd_factor(Matrix(0.5 * he(perf->phi)));
      std::vector<Matrix> seen;
      for (std::size_t l = 0; l < p; ++l) {
        const Matrix& cl = sub.rule(l).C;
        bool dup = false;
        for (const auto& s : seen) dup = dup || s == cl;
        if (dup) continue;
        seen.push_back(cl);
        const Index rk = fphi.rows();
        lmi::AffineBlockMatrix m = rk > 0 ? lmi::AffineBlockMatrix({n, rk})
                                          : lmi::AffineBlockMatrix({n});
        m.add_term(0, 0, -in, *v.K, in);
        if (rk > 0) {
          m.add_constant(0, 1, Matrix(cl.transpose() * fphi.transpose()));
          m.add_constant(1, 1, Matrix(-Matrix::Identity(rk, rk)));
        }
        push(a, std::move(m), lmi::Sense::kNegative, family::kTheta2,
             std::string(family::kTheta2) + "[" + idx({i, l}) + "]", eps);
      }
      lmi::AffineBlockMatrix t1({n, n});
      t1.add_term(0, 0, -in, v.X, in);
      t1.add_term(0, 1, in, v.X, in);
      t1.add_term(1, 1, in, *v.K, in);
      t1.add_constant(1, 1, Matrix(-2.0 * in));
      push(a, std::move(t1), lmi::Sense::kNegative, family::kTheta1,
           std::string(family::kTheta1) + "[" + idx({i}) + "]", eps);
    }
    lmi::AffineBlockMatrix xp({n});
    xp.add_term(0, 0, in, v.X, in);
    push(a, std::move(xp), lmi::Sense::kPositive, family::kXPositive,
         std::string(family::kXPositive) + "[" + idx({i}) + "]", eps);

    if (opts.max_gain > 0.0) {
      const double eta = opts.gain_eta;
      lmi::AffineBlockMatrix xl({n});
      xl.add_term(0, 0, in, v.X, in);
      xl.add_constant(0, 0, Matrix(-eta * in));
      push(a, std::move(xl), lmi::Sense::kPositiveSemi, family::kXLower,
           std::string(family::kXLower) + "[" + idx({i}) + "]", eps);
      const Index m = sub.m();
      for (std::size_t j = 0; j < c; ++j) {
        lmi::AffineBlockMatrix gb({n, m});
        gb.add_term(0, 0, in, v.X, in);
        gb.add_term(1, 0, Matrix::Identity(m, m), v.N[j], in);
        gb.add_constant(1, 1, Matrix(eta * opts.max_gain * opts.max_gain *
                                     Matrix::Identity(m, m)));
        push(a, std::move(gb), lmi::Sense::kPositiveSemi, family::kGainBound,
             std::string(family::kGainBound) + "[" + idx({i, j}) + "]", eps);
      }
    }
  }
  return a;
}

}  // namespace detail

// Extended-dissipativity synthesis conditions. Throws AssumptionError when the
// performance weights are not admissible for this system.
inline Assembly assemble_dissipative(const LargeScaleSystem& sys,
                                  const FouPartition& part,
                                  const PerformanceSpec& perf,
                                  const SynthesisOptions& opts) {
  const auto rep = validate_admissibility(perf, sys);
  if (!rep.passed()) {
    std::string msg = "performance weights violate the admissibility conditions:";
    for (const auto& it : rep.items) {
      if (!it.passed) msg += " item " + std::to_string(it.item) + " (" + it.detail + ")";
    }
    throw AssumptionError(msg);
  }
  return detail::assemble(sys, part, &perf, opts);
}

// Stabilization without disturbance channels.
inline Assembly assemble_disturbance_free(const LargeScaleSystem& sys,
                                  const FouPartition& part,
                                  const SynthesisOptions& opts) {
  return detail::assemble(sys, part, nullptr, opts);
}

struct GainRecovery {
  GainTable G;
  std::vector<double> condition;  // cond(X_i)
  std::vector<std::string> warnings;
};

// G_ij = N_ij X_i⁻¹.
inline GainRecovery recover_gains(const std::vector<Matrix>& x,
                                  const std::vector<std::vector<Matrix>>& n,
                                  double condition_warning = 1e12) {
  if (x.size() != n.size()) throw InputError("recover_gains: X and N counts differ");
  GainRecovery r;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const Matrix& xi = x[i];
    if (xi.rows() != xi.cols()) throw InputError("recover_gains: X must be square");
    Eigen::SelfAdjointEigenSolver<Matrix> es(xi, Eigen::EigenvaluesOnly);
    const double lo = es.eigenvalues()(0);
    const double hi = es.eigenvalues()(es.eigenvalues().size() - 1);
    if (!(lo > 0.0)) {
      throw NumericalError("recover_gains: X_" + std::to_string(i + 1) +
                           " is not positive definite");
    }
    const double cond = hi / lo;
    r.condition.push_back(cond);
    if (cond > condition_warning) {
      r.warnings.push_back("X_" + std::to_string(i + 1) + " condition number " +
                           std::to_string(cond));
    }
    Eigen::LDLT<Matrix> f(xi);
    std::vector<Matrix> gi;
    for (const auto& nij : n[i]) {
      if (nij.cols() != xi.rows()) {
        throw InputError("recover_gains: N and X dimensions differ");
      }
      // G X = N  ⇔  X Gᵀ = Nᵀ since X is symmetric.
      gi.push_back(f.solve(nij.transpose()).transpose());
    }
    r.G.push_back(std::move(gi));
  }
  return r;
}

struct FamilyAudit {
  std::size_t count = 0;
  std::size_t violated = 0;
  double min_margin = std::numeric_limits<double>::infinity();  // λmin(σM)
};

struct SynthesisResult {
  Formulation formulation = Formulation::kExtendedDissipativity;
  std::vector<Matrix> X, K, M;
  std::vector<std::vector<Matrix>> N;  // [i][j]
  std::vector<std::vector<Matrix>> W;  // [i][(l·c + j)·bands + z]
  GainTable G;
  std::vector<double> x_condition;
  std::vector<std::string> warnings;
  std::optional<double> gamma;
  std::vector<std::vector<double>> abar;
  std::vector<double> coupling;
  std::vector<double> tau;
  std::vector<double> p_minus_k_min_eig;  // λmin(X⁻¹ − K), extended-dissipativity only
  std::map<std::string, FamilyAudit> audit;
  bool audit_passed = false;
  FamilyTally tally;
  std::size_t solver_blocks = 0;
  lmi::SdpSolution solver;
};

namespace detail {

inline SynthesisResult collect(const Assembly& a, const lmi::SdpSolution& sol,
                               const SynthesisOptions& opts) {
  SynthesisResult r;
  r.formulation = a.formulation;
  r.abar = a.abar;
  r.coupling = a.coupling;
  r.tau = a.tau;
  r.tally = a.tally;
  r.solver = sol;
  const auto& val = sol.values;
  for (std::size_t i = 0; i < a.vars.size(); ++i) {
    const auto& v = a.vars[i];
    const Matrix ti = a.zeta_scale.at(i).inverse();
    auto unscale = [&ti](const Matrix& m) { return Matrix(ti.transpose() * m * ti); };
    r.X.push_back(val.at(v.X));
    if (v.K) r.K.push_back(val.at(*v.K));
    r.M.push_back(unscale(val.at(v.M)));
    std::vector<Matrix> ns, ws;
    for (auto id : v.N) ns.push_back(val.at(id));
    for (auto id : v.W) ws.push_back(unscale(val.at(id)));
    r.N.push_back(std::move(ns));
    r.W.push_back(std::move(ws));
  }
  auto gains = recover_gains(r.X, r.N, opts.condition_warning);
  r.G = std::move(gains.G);
  r.x_condition = std::move(gains.condition);
  r.warnings = std::move(gains.warnings);
  for (std::size_t i = 0; i < r.K.size(); ++i) {
    const Matrix p = r.X[i].inverse();
    r.p_minus_k_min_eig.push_back(min_eigenvalue(0.5 * he(p - r.K[i])));
    if (r.p_minus_k_min_eig.back() < 0.0) {
      r.warnings.push_back("P_" + std::to_string(i + 1) + " - K_" +
                           std::to_string(i + 1) + " is not positive semidefinite");
    }
  }
  const auto checks = lmi::check_solution(a.constraints, val);
  r.audit_passed = true;
  for (const auto& ch : checks) {
    auto& f = r.audit[ch.family];
    ++f.count;
    f.min_margin = std::min(f.min_margin, ch.min_eigenvalue);
    if (!ch.satisfied) {
      ++f.violated;
      r.audit_passed = false;
    }
  }
  return r;
}

}  // namespace detail

// Solves an assembled problem. Returns nullopt when the solver proves or
// cannot rule out infeasibility; `status` receives the solver verdict.
inline std::optional<SynthesisResult> try_solve(const Assembly& a,
                                                const SynthesisOptions& opts,
                                                lmi::SdpSolution* status = nullptr) {
  const auto prob = lmi::to_feasibility(a.registry, a.constraints);
  auto sol = lmi::solve_feasibility(prob, opts.sdp);
  if (status) *status = sol;
  if (sol.status != lmi::SdpStatus::kFeasible) return std::nullopt;
  auto r = detail::collect(a, sol, opts);
  r.solver_blocks = prob.blocks.size();
  if (!r.audit_passed) {
    if (status) status->status = lmi::SdpStatus::kUndecided;
    return std::nullopt;
  }
  return r;
}

// Smallest λmin(σM) per constraint family at the given point.
inline std::map<std::string, double> family_margins(const Assembly& a,
                                                    const lmi::VarValues& values) {
  std::map<std::string, double> out;
  if (values.size() != a.registry.size()) return out;
  for (const auto& ch : lmi::check_solution(a.constraints, values)) {
    auto it = out.find(ch.family);
    if (it == out.end()) {
      out[ch.family] = ch.min_eigenvalue;
    } else {
      it->second = std::min(it->second, ch.min_eigenvalue);
    }
  }
  return out;
}

inline SynthesisResult solve_or_throw(const Assembly& a, const SynthesisOptions& opts) {
  lmi::SdpSolution st;
  auto r = try_solve(a, opts, &st);
  if (r) return std::move(*r);
  auto attach = [&](Error& e) {
    for (const auto& [f, m] : family_margins(a, st.values)) e.add_detail("margin." + f, m);
    e.add_detail("solver.margin", st.margin);
  };
  if (st.status == lmi::SdpStatus::kInfeasible) {
    InfeasibleError e("synthesis conditions are infeasible: " + st.message);
    attach(e);
    throw e;
  }
  NumericalError e("solver could not decide feasibility: " + st.message);
  attach(e);
  throw e;
}

inline SynthesisResult synthesize(const LargeScaleSystem& sys,
                                  const FouPartition& part,
                                  const PerformanceSpec& perf,
                                  const SynthesisOptions& opts) {
  auto r = solve_or_throw(assemble_dissipative(sys, part, perf, opts), opts);
  if (perf.preset == PresetKind::kHInfinity || perf.preset == PresetKind::kEnergyToPeak ||
      perf.preset == PresetKind::kPassivity) {
    r.gamma = perf.gamma;
  }
  return r;
}

inline SynthesisResult synthesize_disturbance_free(const LargeScaleSystem& sys,
                                                   const FouPartition& part,
                                                   const SynthesisOptions& opts) {
  return solve_or_throw(assemble_disturbance_free(sys, part, opts), opts);
}

struct BisectionStep {
  double gamma = 0.0;
  lmi::SdpStatus status = lmi::SdpStatus::kUndecided;
  double margin = 0.0;
};

struct GammaResult {
  double gamma_min = 0.0;
  SynthesisResult result;
  std::vector<BisectionStep> trace;
  bool at_lower_bracket = false;
};

// Geometric bisection on γ for the H∞ preset. Undecided solves count as
// infeasible so the reported γ always carries a certificate.
inline GammaResult minimize_gamma(const LargeScaleSystem& sys,
                                  const FouPartition& part,
                                  const SynthesisOptions& opts) {
  opts.validate(sys.size());
  const Index nz = sys.subsystem(0).n_z();
  const Index mw = sys.subsystem(0).m_w();
  for (const auto& sub : sys.subsystems()) {
    if (sub.n_z() != nz || sub.m_w() != mw) {
      throw InputError("minimize_gamma needs equal output and disturbance sizes");
    }
  }
  GammaResult out;
  auto attempt = [&](double g) -> std::optional<SynthesisResult> {
    const auto perf = presets::h_infinity(g, nz, mw);
    lmi::SdpSolution st;
    auto r = try_solve(assemble_dissipative(sys, part, perf, opts), opts, &st);
    out.trace.push_back({g, r ? lmi::SdpStatus::kFeasible : st.status, st.margin});
    if (r) r->gamma = g;
    return r;
  };

  double lo = opts.gamma_lower;
  double hi = opts.gamma_upper;
  auto best = attempt(hi);
  if (!best) {
    BracketError e("synthesis infeasible at the top of the gamma bracket (" +
                   std::to_string(hi) + ")");
    e.add_detail("gamma_upper", hi);
    e.add_detail("solver.margin", out.trace.back().margin);
    throw e;
  }
  if (auto r = attempt(lo)) {
    out.gamma_min = lo;
    out.result = std::move(*r);
    out.at_lower_bracket = true;
    return out;
  }
  while (hi / lo > 1.0 + opts.gamma_rel_tol) {
    const double mid = std::sqrt(lo * hi);
    if (auto r = attempt(mid)) {
      hi = mid;
      best = std::move(r);
    } else {
      lo = mid;
    }
  }
  out.gamma_min = hi;
  out.result = std::move(*best);
  return out;
}

// True when no feasible step sits below an infeasible one.
inline bool trace_is_monotone(const std::vector<BisectionStep>& trace) {
  for (const auto& a : trace) {
    for (const auto& b : trace) {
      if (a.status == lmi::SdpStatus::kFeasible &&
          b.status != lmi::SdpStatus::kFeasible && b.gamma > a.gamma) {
        return false;
      }
    }
  }
  return true;
}

}  // namespace it2lss
