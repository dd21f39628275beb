#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "it2lss/errors.hpp"
#include "it2lss/fuzzy_model.hpp"
#include "it2lss/linalg.hpp"
#include "it2lss/trajectory.hpp"

namespace it2lss {

enum class PresetKind {
  kHInfinity,
  kEnergyToPeak,
  kPassivity,
  kVeryStrictPassivity,
  kQsr,
  kCustom
};

inline const char* to_string(PresetKind k) {
  switch (k) {
    case PresetKind::kHInfinity: return "h-infinity";
    case PresetKind::kEnergyToPeak: return "energy-to-peak";
    case PresetKind::kPassivity: return "passivity";
    case PresetKind::kVeryStrictPassivity: return "very-strict-passivity";
    case PresetKind::kQsr: return "qsr";
    case PresetKind::kCustom: return "custom";
  }
  return "?";
}

// Supply rate J = zᵀψ₁z + 2zᵀψ₂w + wᵀψ₃w with terminal weight φ and level ρ.
struct PerformanceSpec {
  Matrix phi;
  Matrix psi1;
  Matrix psi2;
  Matrix psi3;
  double rho = 0.0;
  PresetKind preset = PresetKind::kCustom;
  double gamma = 0.0;  // set by the γ-parameterized presets

  Index n_z() const { return psi1.rows(); }
  Index m_w() const { return psi3.rows(); }

  void validate_shapes() const {
    const Index nz = phi.rows();
    const Index mw = psi3.rows();
    require_shape(phi, nz, nz, "phi");
    require_shape(psi1, nz, nz, "psi1");
    require_shape(psi2, nz, mw, "psi2");
    require_shape(psi3, mw, mw, "psi3");
  }
};

namespace presets {

inline void require_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw InputError(std::string(what) + " must be positive and finite");
  }
}

inline PerformanceSpec h_infinity(double gamma, Index n_z, Index m_w) {
  require_positive(gamma, "gamma");
  PerformanceSpec s;
  s.phi = Matrix::Zero(n_z, n_z);
  s.psi1 = -Matrix::Identity(n_z, n_z);
  s.psi2 = Matrix::Zero(n_z, m_w);
  s.psi3 = gamma * gamma * Matrix::Identity(m_w, m_w);
  s.preset = PresetKind::kHInfinity;
  s.gamma = gamma;
  return s;
}

inline PerformanceSpec energy_to_peak(double gamma, Index n_z, Index m_w) {
  require_positive(gamma, "gamma");
  PerformanceSpec s;
  s.phi = Matrix::Identity(n_z, n_z);
  s.psi1 = Matrix::Zero(n_z, n_z);
  s.psi2 = Matrix::Zero(n_z, m_w);
  s.psi3 = gamma * gamma * Matrix::Identity(m_w, m_w);
  s.preset = PresetKind::kEnergyToPeak;
  s.gamma = gamma;
  return s;
}

inline PerformanceSpec passivity(double gamma, Index n_z, Index m_w) {
  require_positive(gamma, "gamma");
  if (n_z != m_w) {
    throw InputError("passivity needs output and disturbance of equal size");
  }
  PerformanceSpec s;
  s.phi = Matrix::Zero(n_z, n_z);
  s.psi1 = Matrix::Zero(n_z, n_z);
  s.psi2 = Matrix::Identity(n_z, m_w);
  s.psi3 = gamma * Matrix::Identity(m_w, m_w);
  s.preset = PresetKind::kPassivity;
  s.gamma = gamma;
  return s;
}

inline PerformanceSpec very_strict_passivity(double epsilon, double sigma,
                                             Index n_z, Index m_w) {
  require_positive(epsilon, "epsilon");
  require_positive(sigma, "sigma");
  if (n_z != m_w) {
    throw InputError(
        "very-strict passivity needs output and disturbance of equal size");
  }
  PerformanceSpec s;
  s.phi = Matrix::Zero(n_z, n_z);
  s.psi1 = -epsilon * Matrix::Identity(n_z, n_z);
  s.psi2 = Matrix::Identity(n_z, m_w);
  s.psi3 = -sigma * Matrix::Identity(m_w, m_w);
  s.preset = PresetKind::kVeryStrictPassivity;
  return s;
}

inline PerformanceSpec qsr(const Matrix& q, const Matrix& s_mat,
                           const Matrix& r, double alpha) {
  require_positive(alpha, "alpha");
  const Index nz = q.rows();
  const Index mw = r.rows();
  require_shape(q, nz, nz, "Q");
  require_shape(s_mat, nz, mw, "S");
  require_shape(r, mw, mw, "R");
  PerformanceSpec s;
  s.phi = Matrix::Zero(nz, nz);
  s.psi1 = q;
  s.psi2 = s_mat;
  s.psi3 = r - alpha * Matrix::Identity(mw, mw);
  s.preset = PresetKind::kQsr;
  return s;
}

}  // namespace presets

struct AssumptionItem {
  int item = 0;
  bool passed = false;
  std::string detail;
};

struct AssumptionReport {
  std::vector<AssumptionItem> items;  // items 1..5 in order
  bool passed() const {
    for (const auto& i : items) {
      if (!i.passed) return false;
    }
    return !items.empty();
  }
};

// Itemized check of the five admissibility conditions against every D₂ of
// every rule of every subsystem.
inline AssumptionReport validate_admissibility(const PerformanceSpec& spec,
                                             const LargeScaleSystem& sys,
                                             double tol = 1e-12) {
  spec.validate_shapes();
  for (std::size_t i = 0; i < sys.size(); ++i) {
    const auto& sub = sys.subsystem(i);
    if (sub.n_z() != spec.n_z() || sub.m_w() != spec.m_w()) {
      throw InputError("performance spec dimensions do not match subsystem " +
                       std::to_string(i));
    }
  }
  AssumptionReport rep;
  auto add = [&rep](int item, bool ok, std::string detail) {
    rep.items.push_back({item, ok, std::move(detail)});
  };

  const bool sym = is_symmetric(spec.phi, tol) && is_symmetric(spec.psi1, tol) &&
                   is_symmetric(spec.psi3, tol);
  add(1, sym, sym ? "phi, psi1, psi3 symmetric" : "a weight is not symmetric");

  const double phi_min = min_eigenvalue(0.5 * he(spec.phi));
  const double psi1_max = max_eigenvalue(0.5 * he(spec.psi1));
  const bool signs = phi_min >= -tol && psi1_max <= tol;
  add(2, signs,
      "lambda_min(phi)=" + std::to_string(phi_min) +
          ", lambda_max(psi1)=" + std::to_string(psi1_max));

  const double phi_norm = spectral_norm(spec.phi);
  double d2_max = 0.0;
  std::string d2_where = "none";
  for (std::size_t i = 0; i < sys.size(); ++i) {
    const auto& sub = sys.subsystem(i);
    for (std::size_t l = 0; l < sub.p(); ++l) {
      const double d = spectral_norm(sub.rule(l).D2);
      if (d > d2_max) {
        d2_max = d;
        d2_where = "i=" + std::to_string(i) + ",l=" + std::to_string(l);
      }
    }
  }
  add(3, d2_max * phi_norm <= tol,
      "max ||D2||=" + std::to_string(d2_max) + " at " + d2_where +
          ", ||phi||=" + std::to_string(phi_norm));

  const double cross =
      (spectral_norm(spec.psi1) + spectral_norm(spec.psi2)) * phi_norm;
  add(4, cross <= tol, "(||psi1||+||psi2||)*||phi||=" + std::to_string(cross));

  double worst = std::numeric_limits<double>::infinity();
  std::string worst_where = "none";
  for (std::size_t i = 0; i < sys.size(); ++i) {
    const auto& sub = sys.subsystem(i);
    for (std::size_t l = 0; l < sub.p(); ++l) {
      const Matrix& d2 = sub.rule(l).D2;
      const Matrix m = d2.transpose() * spec.psi1 * d2 +
                       he(d2.transpose() * spec.psi2) + spec.psi3;
      const double e = min_eigenvalue(0.5 * he(m));
      if (e < worst) {
        worst = e;
        worst_where = "i=" + std::to_string(i) + ",l=" + std::to_string(l);
      }
    }
  }
  add(5, worst > 0.0,
      "min eigenvalue " + std::to_string(worst) + " at " + worst_where);
  return rep;
}

inline double supply_rate(const PerformanceSpec& spec, const Vector& z,
                          const Vector& w) {
  if (z.size() != spec.n_z() || w.size() != spec.m_w()) {
    throw InputError("supply_rate: dimension mismatch");
  }
  return z.dot(spec.psi1 * z) + 2.0 * z.dot(spec.psi2 * w) +
         w.dot(spec.psi3 * w);
}

struct Certification {
  std::vector<double> margin;  // ∫₀ᵗJ − zᵀφz at every sample
  double min_margin = 0.0;
  double min_time = 0.0;
  double rho = 0.0;
  bool passed = false;
};

// Trapezoidal ∫J summed over subsystems, minus Σ zᵢᵀφzᵢ, minimized over t.
inline Certification certify(const Trajectory& traj,
                             const PerformanceSpec& spec, double rho) {
  traj.validate();
  spec.validate_shapes();
  if (traj.samples() == 0) throw InputError("certify: empty trajectory");
  for (std::size_t i = 0; i < traj.subsystems(); ++i) {
    if (traj.z[i].cols() != spec.n_z() || traj.w[i].cols() != spec.m_w()) {
      throw InputError("certify: trajectory channels for subsystem " +
                       std::to_string(i) + " do not match the supply rate");
    }
  }
  const std::size_t k = traj.samples();
  auto j_at = [&](std::size_t s) {
    double acc = 0.0;
    for (std::size_t i = 0; i < traj.subsystems(); ++i) {
      acc += supply_rate(spec, traj.z[i].row(static_cast<Index>(s)).transpose(),
                         traj.w[i].row(static_cast<Index>(s)).transpose());
    }
    return acc;
  };
  auto terminal = [&](std::size_t s) {
    double acc = 0.0;
    for (std::size_t i = 0; i < traj.subsystems(); ++i) {
      const Vector z = traj.z[i].row(static_cast<Index>(s)).transpose();
      acc += z.dot(spec.phi * z);
    }
    return acc;
  };

  Certification c;
  c.rho = rho;
  c.margin.resize(k);
  double integral = 0.0;
  double prev = j_at(0);
  c.margin[0] = 0.0 - terminal(0);
  for (std::size_t s = 1; s < k; ++s) {
    const double cur = j_at(s);
    integral += 0.5 * (traj.t[s] - traj.t[s - 1]) * (prev + cur);
    prev = cur;
    c.margin[s] = integral - terminal(s);
  }
  c.min_margin = c.margin[0];
  c.min_time = traj.t[0];
  for (std::size_t s = 1; s < k; ++s) {
    if (c.margin[s] < c.min_margin) {
      c.min_margin = c.margin[s];
      c.min_time = traj.t[s];
    }
  }
  c.passed = c.min_margin >= rho;
  return c;
}

struct BoundPair {
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds(double tol = 0.0) const { return lhs <= rhs + tol; }
};

// (Σx)ᵀW(Σx) ≤ d̄·Σ xᵀWx with d̄ the number of vectors.
inline BoundPair jensen_bound(const std::vector<Vector>& xs, const Matrix& w) {
  if (xs.empty()) throw InputError("jensen_bound: no vectors");
  const Index n = w.rows();
  require_shape(w, n, n, "jensen_bound weight");
  if (!is_symmetric(w, 1e-12)) throw InputError("jensen_bound: W not symmetric");
  if (min_eigenvalue(w) < -1e-12 * std::max(1.0, w.cwiseAbs().maxCoeff())) {
    throw InputError("jensen_bound: W is not positive semidefinite");
  }
  Vector sum = Vector::Zero(n);
  double acc = 0.0;
  for (const auto& x : xs) {
    if (x.size() != n) throw InputError("jensen_bound: dimension mismatch");
    sum += x;
    acc += x.dot(w * x);
  }
  return {sum.dot(w * sum), static_cast<double>(xs.size()) * acc};
}

// 2x̄ᵀȳ ≤ κ⁻¹x̄ᵀx̄ + κȳᵀȳ.
inline BoundPair young_bound(const Vector& x, const Vector& y, double kappa) {
  if (!(kappa > 0.0)) throw InputError("young_bound: kappa must be positive");
  if (x.size() != y.size()) throw InputError("young_bound: dimension mismatch");
  return {2.0 * x.dot(y), x.squaredNorm() / kappa + kappa * y.squaredNorm()};
}

}  // namespace it2lss
