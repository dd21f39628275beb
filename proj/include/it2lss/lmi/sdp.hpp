#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <limits>
#include <string>
#include <unordered_map>
#include <vector>

#include "it2lss/errors.hpp"
#include "it2lss/linalg.hpp"
#include "it2lss/lmi/affine.hpp"

namespace it2lss::lmi {

// Maps every decision variable to a contiguous run of free scalars.
// Symmetric variables use the basis {E_aa} ∪ {E_ab + E_ba, a < b}, so the
// round trip values → y → values is lossless.
class ScalarLayout {
 public:
  ScalarLayout() = default;
  explicit ScalarLayout(const VarRegistry& reg) : vars_(reg.vars()) {
    offsets_.reserve(vars_.size());
    Index off = 0;
    for (const auto& v : vars_) {
      offsets_.push_back(off);
      off += v.scalar_count();
    }
    total_ = off;
  }

  Index total() const { return total_; }
  std::size_t var_count() const { return vars_.size(); }
  Index offset(VarId id) const { return offsets_.at(id); }
  const DecisionVar& var(VarId id) const { return vars_.at(id); }

  // (row, col) of scalar s inside its variable.
  std::pair<Index, Index> entry(VarId id, Index s) const {
    const auto& v = vars_.at(id);
    if (v.kind == VarKind::kRectangular) return {s / v.cols, s % v.cols};
    Index a = 0;
    Index k = s;
    while (k >= v.rows - a) {
      k -= v.rows - a;
      ++a;
    }
    return {a, a + k};
  }

  Vector to_scalars(const VarValues& values) const {
    if (values.size() != vars_.size()) {
      throw AssemblyError("value count does not match registry");
    }
    Vector y(total_);
    for (std::size_t id = 0; id < vars_.size(); ++id) {
      const auto& v = vars_[id];
      require_shape(values[id], v.rows, v.cols, "value of '" + v.name + "'");
      for (Index s = 0; s < v.scalar_count(); ++s) {
        auto [r, c] = entry(id, s);
        y(offsets_[id] + s) = values[id](r, c);
      }
    }
    return y;
  }

  VarValues from_scalars(const Vector& y) const {
    if (y.size() != total_) throw AssemblyError("scalar vector has wrong size");
    VarValues out;
    out.reserve(vars_.size());
    for (std::size_t id = 0; id < vars_.size(); ++id) {
      const auto& v = vars_[id];
      Matrix m = Matrix::Zero(v.rows, v.cols);
      for (Index s = 0; s < v.scalar_count(); ++s) {
        auto [r, c] = entry(id, s);
        m(r, c) = y(offsets_[id] + s);
        if (v.kind == VarKind::kSymmetric) m(c, r) = m(r, c);
      }
      out.push_back(std::move(m));
    }
    return out;
  }

 private:
  std::vector<DecisionVar> vars_;
  std::vector<Index> offsets_;
  Index total_ = 0;
};

// One oriented block: σ·(C + Σ y_k F_k) − εI ⪰ t·I must hold.
struct SdpBlock {
  Matrix constant;            // σC − εI
  std::vector<Index> scalars;  // global scalar indices with nonzero F
  std::vector<Matrix> coeffs;  // σF_k, same order as scalars
  std::vector<std::size_t> sources;  // constraint indices sharing this block
};

struct SdpProblem {
  ScalarLayout layout;
  std::vector<SdpBlock> blocks;
  std::size_t constraint_count = 0;
  std::size_t duplicates_removed = 0;
};

namespace detail {

inline std::size_t hash_block(const SdpBlock& b) {
  std::size_t h = std::hash<Index>{}(b.constant.rows());
  auto mix = [&h](std::size_t v) {
    h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  };
  auto mix_matrix = [&](const Matrix& m) {
    for (Index k = 0; k < m.size(); ++k) {
      double d = m.data()[k];
      if (d == 0.0) d = 0.0;  // fold -0
      std::uint64_t bits = 0;
      std::memcpy(&bits, &d, sizeof bits);
      mix(std::hash<std::uint64_t>{}(bits));
    }
  };
  mix_matrix(b.constant);
  for (std::size_t k = 0; k < b.scalars.size(); ++k) {
    mix(std::hash<Index>{}(b.scalars[k]));
    mix_matrix(b.coeffs[k]);
  }
  return h;
}

inline bool same_block(const SdpBlock& a, const SdpBlock& b) {
  if (a.constant.rows() != b.constant.rows()) return false;
  if (a.scalars != b.scalars) return false;
  if (a.constant != b.constant) return false;
  for (std::size_t k = 0; k < a.coeffs.size(); ++k) {
    if (a.coeffs[k] != b.coeffs[k]) return false;
  }
  return true;
}

}  // namespace detail

// Vectorizes every constraint. Exactly repeated blocks are merged.
inline SdpProblem to_feasibility(const VarRegistry& reg,
                                 const std::vector<Constraint>& constraints) {
  SdpProblem prob;
  prob.layout = ScalarLayout(reg);
  prob.constraint_count = constraints.size();
  std::unordered_map<std::size_t, std::vector<std::size_t>> seen;

  for (std::size_t ci = 0; ci < constraints.size(); ++ci) {
    const auto& con = constraints[ci];
    const auto& m = con.matrix;
    const double sigma = orientation(con.sense);
    const Index s = m.size();
    if (s == 0) throw AssemblyError("empty constraint '" + con.label + "'");

    // Group halves by variable, preserving first-seen order.
    std::vector<VarId> order;
    std::unordered_map<VarId, std::vector<const LinearTerm*>> by_var;
    for (const auto& h : m.halves()) {
      if (h.var >= reg.size()) {
        throw AssemblyError("constraint '" + con.label +
                            "' references undeclared variable id " +
                            std::to_string(h.var));
      }
      const auto& v = reg[h.var];
      if (h.left.cols() != v.rows || h.right.rows() != v.cols) {
        throw AssemblyError("constraint '" + con.label +
                            "' has a term whose inner dimensions do not match '" +
                            v.name + "'");
      }
      if (!by_var.count(h.var)) order.push_back(h.var);
      by_var[h.var].push_back(&h);
    }
    std::sort(order.begin(), order.end());

    SdpBlock blk;
    blk.constant = sigma * m.constant() - con.epsilon * Matrix::Identity(s, s);
    for (VarId id : order) {
      const auto& v = reg[id];
      for (Index k = 0; k < v.scalar_count(); ++k) {
        auto [r, c] = prob.layout.entry(id, k);
        Matrix f = Matrix::Zero(s, s);
        for (const LinearTerm* h : by_var[id]) {
          Matrix p = h->left.col(r) * h->right.row(c);
          if (v.kind == VarKind::kSymmetric && r != c) {
            p += h->left.col(c) * h->right.row(r);
          }
          f += p + p.transpose();
        }
        if (f.cwiseAbs().maxCoeff() == 0.0) continue;
        blk.scalars.push_back(prob.layout.offset(id) + k);
        blk.coeffs.push_back(sigma * f);
      }
    }

    const std::size_t h = detail::hash_block(blk);
    bool merged = false;
    for (std::size_t other : seen[h]) {
      if (detail::same_block(prob.blocks[other], blk)) {
        prob.blocks[other].sources.push_back(ci);
        ++prob.duplicates_removed;
        merged = true;
        break;
      }
    }
    if (merged) continue;
    blk.sources.push_back(ci);
    seen[h].push_back(prob.blocks.size());
    prob.blocks.push_back(std::move(blk));
  }
  return prob;
}

// SDPA sparse text (".dat-s"): find y with Σ y_k F_k − F_0 ⪰ 0, zero
// objective. F_0 = −(σC − εI) and F_k = σF_k per block; entries are the upper
// triangle with 1-based indices.
inline std::string to_sdpa(const SdpProblem& prob) {
  auto num = [](double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  std::string out = "\"feasibility problem: " + std::to_string(prob.constraint_count) +
                    " constraints, " + std::to_string(prob.blocks.size()) + " blocks\n";
  out += std::to_string(prob.layout.total()) + "\n";
  out += std::to_string(prob.blocks.size()) + "\n";
  for (std::size_t b = 0; b < prob.blocks.size(); ++b) {
    out += (b ? " " : "") + std::to_string(prob.blocks[b].constant.rows());
  }
  out += "\n";
  for (Index k = 0; k < prob.layout.total(); ++k) out += (k ? " 0" : "0");
  out += "\n";
  auto emit = [&](std::size_t mat, std::size_t blk, const Matrix& m, double sign) {
    for (Index i = 0; i < m.rows(); ++i) {
      for (Index j = i; j < m.cols(); ++j) {
        if (m(i, j) != 0.0) {
          out += std::to_string(mat) + " " + std::to_string(blk + 1) + " " +
                 std::to_string(i + 1) + " " + std::to_string(j + 1) + " " +
                 num(sign * m(i, j)) + "\n";
        }
      }
    }
  };
  for (std::size_t b = 0; b < prob.blocks.size(); ++b) {
    emit(0, b, prob.blocks[b].constant, -1.0);
  }
  // SDPA expects entries grouped by matrix number.
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> by_scalar(
      static_cast<std::size_t>(prob.layout.total()));
  for (std::size_t b = 0; b < prob.blocks.size(); ++b) {
    const auto& blk = prob.blocks[b];
    for (std::size_t k = 0; k < blk.scalars.size(); ++k) {
      by_scalar[static_cast<std::size_t>(blk.scalars[k])].push_back({b, k});
    }
  }
  for (std::size_t s = 0; s < by_scalar.size(); ++s) {
    for (const auto& [b, k] : by_scalar[s]) emit(s + 1, b, prob.blocks[b].coeffs[k], 1.0);
  }
  return out;
}

struct SdpOptions {
  double radius = 1e4;         // ‖y‖ ≤ radius
  double target_margin = 0.0;  // feasible once t exceeds this
  bool stop_at_target = true;
  double margin_cap = 1.0;  // t ≤ target + margin_cap keeps the problem bounded
  double mu = 8.0;
  int max_outer = 60;
  int max_newton = 80;
  double center_tol = 1e-7;  // Newton decrement² / 2
  double gap_tol = 1e-10;
};

enum class SdpStatus { kFeasible, kInfeasible, kUndecided };

inline const char* to_string(SdpStatus s) {
  switch (s) {
    case SdpStatus::kFeasible: return "feasible";
    case SdpStatus::kInfeasible: return "infeasible";
    case SdpStatus::kUndecided: return "undecided";
  }
  return "?";
}

struct SdpSolution {
  SdpStatus status = SdpStatus::kUndecided;
  VarValues values;
  double margin = -std::numeric_limits<double>::infinity();
  double upper_bound = std::numeric_limits<double>::infinity();
  int outer_iterations = 0;
  int newton_iterations = 0;
  double seconds = 0.0;
  std::string message;
};

namespace detail {

struct BarrierEval {
  bool in_domain = false;
  double value = 0.0;
};

class Barrier {
 public:
  Barrier(const SdpProblem& p, const SdpOptions& o)
      : prob_(p), opt_(o), nv_(p.layout.total()) {
    nu_ = 2.0;  // ball + cap
    for (const auto& b : p.blocks) nu_ += static_cast<double>(b.constant.rows());
  }

  Index dim() const { return nv_ + 1; }
  double nu() const { return nu_; }
  double cap() const { return opt_.target_margin + opt_.margin_cap; }

  Matrix slack(const SdpBlock& b, const Vector& z) const {
    Matrix s = b.constant;
    for (std::size_t k = 0; k < b.scalars.size(); ++k) {
      s.noalias() += z(b.scalars[k]) * b.coeffs[k];
    }
    s.diagonal().array() -= z(nv_);
    return s;
  }

  double min_slack_eigen(const Vector& z) const {
    double lo = std::numeric_limits<double>::infinity();
    for (const auto& b : prob_.blocks) lo = std::min(lo, min_eigenvalue(slack(b, z)));
    return lo;
  }

  BarrierEval value(const Vector& z, double s) const {
    BarrierEval e;
    const double t = z(nv_);
    const double u = opt_.radius * opt_.radius - z.head(nv_).squaredNorm();
    const double w = cap() - t;
    if (!(u > 0.0) || !(w > 0.0)) return e;
    double f = -s * t - std::log(u) - std::log(w);
    for (const auto& b : prob_.blocks) {
      Eigen::LLT<Matrix> llt(slack(b, z));
      if (llt.info() != Eigen::Success) return e;
      double ld = 0.0;
      for (Index k = 0; k < b.constant.rows(); ++k) {
        const double d = llt.matrixLLT()(k, k);
        if (!(d > 0.0)) return e;
        ld += std::log(d);
      }
      f -= 2.0 * ld;
    }
    e.in_domain = std::isfinite(f);
    e.value = f;
    return e;
  }

  // Gradient and Hessian at a point inside the domain.
  void derivatives(const Vector& z, double s, Vector& g, Matrix& h) const {
    const Index d = dim();
    g = Vector::Zero(d);
    h = Matrix::Zero(d, d);
    g(nv_) = -s;
    for (const auto& b : prob_.blocks) {
      const Index n = b.constant.rows();
      Eigen::LLT<Matrix> llt(slack(b, z));
      if (llt.info() != Eigen::Success) {
        throw NumericalError("barrier derivative outside the domain");
      }
      const Index m = static_cast<Index>(b.scalars.size()) + 1;
      Matrix q(n * n, m);
      const Matrix lmat = llt.matrixL();
      for (Index k = 0; k < m; ++k) {
        Matrix f = k + 1 < m ? b.coeffs[static_cast<std::size_t>(k)]
                             : Matrix(-Matrix::Identity(n, n));
        Matrix gk = lmat.triangularView<Eigen::Lower>().solve(f);
        gk = lmat.triangularView<Eigen::Lower>()
                 .solve(gk.transpose())
                 .transpose();
        q.col(k) = Eigen::Map<const Vector>(gk.data(), n * n);
      }
      Matrix hq = q.transpose() * q;
      for (Index a = 0; a < m; ++a) {
        const Index ga = a + 1 < m ? b.scalars[static_cast<std::size_t>(a)] : nv_;
        double tr = 0.0;
        for (Index r = 0; r < n; ++r) tr += q(r * n + r, a);
        g(ga) -= tr;
        for (Index c = 0; c < m; ++c) {
          const Index gc = c + 1 < m ? b.scalars[static_cast<std::size_t>(c)] : nv_;
          h(ga, gc) += hq(a, c);
        }
      }
    }
    const Vector y = z.head(nv_);
    const double u = opt_.radius * opt_.radius - y.squaredNorm();
    g.head(nv_) += 2.0 * y / u;
    h.topLeftCorner(nv_, nv_) += (2.0 / u) * Matrix::Identity(nv_, nv_) +
                                 (4.0 / (u * u)) * (y * y.transpose());
    const double w = cap() - z(nv_);
    g(nv_) += 1.0 / w;
    h(nv_, nv_) += 1.0 / (w * w);
  }

 private:
  const SdpProblem& prob_;
  const SdpOptions& opt_;
  Index nv_;
  double nu_ = 0.0;
};

}  // namespace detail

// Decides whether some y with ‖y‖ ≤ radius satisfies every block with margin
// t > target. Maximizes t along the central path of a log-det barrier and
// certifies infeasibility with the duality-gap bound t* ≤ t + ν/s.
inline SdpSolution solve_feasibility(const SdpProblem& prob,
                                     const SdpOptions& opt = {}) {
  const auto start = std::chrono::steady_clock::now();
  SdpSolution sol;
  if (!(opt.radius > 0.0) || !(opt.mu > 1.0) || !(opt.margin_cap > 0.0)) {
    throw InputError("solve_feasibility: invalid options");
  }
  const Index nv = prob.layout.total();
  detail::Barrier bar(prob, opt);
  Vector z = Vector::Zero(nv + 1);

  auto finish = [&](SdpStatus st, std::string msg) {
    sol.status = st;
    sol.message = std::move(msg);
    sol.values = prob.layout.from_scalars(z.head(nv));
    sol.seconds = std::chrono::duration<double>(
                      std::chrono::steady_clock::now() - start)
                      .count();
    return sol;
  };

  if (prob.blocks.empty()) {
    sol.margin = std::numeric_limits<double>::infinity();
    return finish(SdpStatus::kFeasible, "no constraints");
  }

  const double t0 = bar.min_slack_eigen(z);
  sol.margin = t0;
  if (t0 > opt.target_margin && opt.stop_at_target) {
    return finish(SdpStatus::kFeasible, "origin is feasible");
  }
  z(nv) = std::min(t0, opt.target_margin) - 1.0;

  double s = 1.0;
  for (int outer = 0; outer < opt.max_outer; ++outer) {
    sol.outer_iterations = outer + 1;
    bool centered = false;
    for (int it = 0; it < opt.max_newton; ++it) {
      ++sol.newton_iterations;
      Vector g;
      Matrix h;
      bar.derivatives(z, s, g, h);
      Eigen::LDLT<Matrix> ldlt(h);
      Vector dz = -ldlt.solve(g);
      if (ldlt.info() != Eigen::Success || !dz.allFinite()) {
        const double reg = 1e-12 * std::max(1.0, h.diagonal().maxCoeff());
        Matrix hr = h;
        hr.diagonal().array() += reg;
        dz = -hr.ldlt().solve(g);
        if (!dz.allFinite()) {
          return finish(SdpStatus::kUndecided, "singular Newton system");
        }
      }
      const double dec = -g.dot(dz);
      if (dec / 2.0 < opt.center_tol) {
        centered = true;
        break;
      }
      const auto f0 = bar.value(z, s);
      double step = 1.0;
      bool moved = false;
      for (int ls = 0; ls < 60; ++ls) {
        const Vector trial = z + step * dz;
        const auto ft = bar.value(trial, s);
        if (ft.in_domain && ft.value <= f0.value - 0.25 * step * dec) {
          z = trial;
          moved = true;
          break;
        }
        step *= 0.5;
      }
      if (!moved) {
        centered = dec / 2.0 < 1e-3;
        break;
      }
      sol.margin = z(nv);
      if (opt.stop_at_target && z(nv) > opt.target_margin) {
        return finish(SdpStatus::kFeasible, "margin reached target");
      }
    }
    sol.margin = z(nv);
    const double gap = bar.nu() / s;
    if (centered) {
      sol.upper_bound = z(nv) + 2.0 * gap;
      if (sol.upper_bound < opt.target_margin) {
        return finish(SdpStatus::kInfeasible, "duality bound below target");
      }
    }
    if (gap < opt.gap_tol) {
      if (z(nv) > opt.target_margin) {
        return finish(SdpStatus::kFeasible, "converged");
      }
      return finish(SdpStatus::kUndecided, "converged at the boundary");
    }
    s *= opt.mu;
  }
  if (z(nv) > opt.target_margin) {
    return finish(SdpStatus::kFeasible, "iteration limit");
  }
  return finish(SdpStatus::kUndecided, "iteration limit");
}

struct ConstraintCheck {
  std::string label;
  std::string family;
  double min_eigenvalue = 0.0;  // of σ·M
  bool satisfied = false;
};

// Recomputes each constraint from the dense values. Strict senses need
// λmin(σM) > 0, non-strict ones λmin(σM) ≥ −tol.
inline std::vector<ConstraintCheck> check_solution(
    const std::vector<Constraint>& constraints, const VarValues& values,
    double tol = 1e-9) {
  std::vector<ConstraintCheck> out;
  out.reserve(constraints.size());
  for (const auto& c : constraints) {
    ConstraintCheck r;
    r.label = c.label;
    r.family = c.family;
    r.min_eigenvalue =
        min_eigenvalue(orientation(c.sense) * c.matrix.evaluate(values));
    r.satisfied = is_strict(c.sense) ? r.min_eigenvalue > 0.0
                                     : r.min_eigenvalue >= -tol;
    out.push_back(std::move(r));
  }
  return out;
}

inline bool all_satisfied(const std::vector<ConstraintCheck>& checks) {
  for (const auto& c : checks) {
    if (!c.satisfied) return false;
  }
  return true;
}

}  // namespace it2lss::lmi
