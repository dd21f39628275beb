#pragma once

#include <cmath>
#include <string>
#include <variant>
#include <vector>

#include "it2lss/errors.hpp"
#include "it2lss/fuzzy_model.hpp"
#include "it2lss/linalg.hpp"
#include "it2lss/trajectory.hpp"

namespace it2lss {

// G[i][j]: gain of controller rule j in subsystem i (m_i × n_i).
using GainTable = std::vector<std::vector<Matrix>>;

inline GainTable zero_gains(const LargeScaleSystem& sys) {
  GainTable g(sys.size());
  for (std::size_t i = 0; i < sys.size(); ++i) {
    const auto& sub = sys.subsystem(i);
    g[i].assign(sys.controller(i).c(), Matrix::Zero(sub.m(), sub.n()));
  }
  return g;
}

inline void check_gains(const LargeScaleSystem& sys, const GainTable& g) {
  if (g.size() != sys.size()) throw InputError("gain table has wrong subsystem count");
  for (std::size_t i = 0; i < sys.size(); ++i) {
    const auto& sub = sys.subsystem(i);
    if (g[i].size() != sys.controller(i).c()) {
      throw InputError("gain table for subsystem " + std::to_string(i) +
                       " has wrong rule count");
    }
    for (const auto& gj : g[i]) require_shape(gj, sub.m(), sub.n(), "gain");
  }
}

struct ZeroSignal {};
struct DecayingSinusoid {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
};
// Piecewise linear between samples, zero outside [times.front(), times.back()].
struct TabulatedSignal {
  std::vector<double> times;
  std::vector<double> values;
};

class Signal {
 public:
  using Shape = std::variant<ZeroSignal, DecayingSinusoid, TabulatedSignal>;

  Signal() = default;
  static Signal zero() { return Signal(ZeroSignal{}); }
  static Signal decaying_sinusoid(double a, double b, double c) {
    if (!std::isfinite(a) || !std::isfinite(b) || !std::isfinite(c)) {
      throw InputError("decaying sinusoid parameters must be finite");
    }
    return Signal(DecayingSinusoid{a, b, c});
  }
  static Signal tabulated(std::vector<double> times, std::vector<double> values) {
    if (times.size() != values.size() || times.size() < 2) {
      throw InputError("tabulated signal needs matching arrays of length >= 2");
    }
    for (std::size_t k = 0; k < times.size(); ++k) {
      if (!std::isfinite(times[k]) || !std::isfinite(values[k])) {
        throw InputError("tabulated signal entries must be finite");
      }
      if (k > 0 && !(times[k] > times[k - 1])) {
        throw InputError("tabulated signal times must be strictly increasing");
      }
    }
    return Signal(TabulatedSignal{std::move(times), std::move(values)});
  }

  const Shape& shape() const { return shape_; }

  double operator()(double t) const {
    return std::visit([t](const auto& s) { return eval(s, t); }, shape_);
  }

 private:
  explicit Signal(Shape s) : shape_(std::move(s)) {}

  static double eval(const ZeroSignal&, double) { return 0.0; }
  static double eval(const DecayingSinusoid& s, double t) {
    return s.a * std::exp(-s.b * t) * std::sin(s.c * t);
  }
  static double eval(const TabulatedSignal& s, double t) {
    if (t < s.times.front() || t > s.times.back()) return 0.0;
    auto it = std::upper_bound(s.times.begin(), s.times.end(), t);
    if (it == s.times.end()) return s.values.back();
    const auto k = static_cast<std::size_t>(it - s.times.begin());
    const double t0 = s.times[k - 1];
    const double t1 = s.times[k];
    const double f = (t - t0) / (t1 - t0);
    return (1.0 - f) * s.values[k - 1] + f * s.values[k];
  }

  Shape shape_ = ZeroSignal{};
};

// channels[i][r]: component r of the disturbance entering subsystem i.
struct DisturbanceSpec {
  std::vector<std::vector<Signal>> channels;

  static DisturbanceSpec zero(const LargeScaleSystem& sys) {
    DisturbanceSpec d;
    for (std::size_t i = 0; i < sys.size(); ++i) {
      d.channels.emplace_back(static_cast<std::size_t>(sys.subsystem(i).m_w()),
                              Signal::zero());
    }
    return d;
  }

  void validate(const LargeScaleSystem& sys) const {
    if (channels.size() != sys.size()) {
      throw InputError("disturbance spec has wrong subsystem count");
    }
    for (std::size_t i = 0; i < sys.size(); ++i) {
      if (static_cast<Index>(channels[i].size()) != sys.subsystem(i).m_w()) {
        throw InputError("disturbance spec for subsystem " + std::to_string(i) +
                         " has wrong channel count");
      }
    }
  }

  std::vector<Vector> at(double t) const {
    std::vector<Vector> out;
    out.reserve(channels.size());
    for (const auto& ch : channels) {
      Vector v(static_cast<Index>(ch.size()));
      for (std::size_t r = 0; r < ch.size(); ++r) v(static_cast<Index>(r)) = ch[r](t);
      out.push_back(std::move(v));
    }
    return out;
  }
};

struct LocalSignals {
  Vector u;
  Vector z;
};

namespace detail {

inline void check_states(const LargeScaleSystem& sys, const std::vector<Vector>& x,
                         const std::vector<Vector>& w) {
  if (x.size() != sys.size() || w.size() != sys.size()) {
    throw InputError("state or disturbance list has wrong subsystem count");
  }
  for (std::size_t i = 0; i < sys.size(); ++i) {
    if (x[i].size() != sys.subsystem(i).n()) {
      throw InputError("state of subsystem " + std::to_string(i) +
                       " has wrong dimension");
    }
    if (w[i].size() != sys.subsystem(i).m_w()) {
      throw InputError("disturbance of subsystem " + std::to_string(i) +
                       " has wrong dimension");
    }
  }
}

template <class F>
auto with_grade_context(std::size_t i, const Vector& x, F&& f) {
  try {
    return f();
  } catch (const DegenerateInputError& e) {
    std::string s;
    for (Index r = 0; r < x.size(); ++r) {
      s += (r ? "," : "") + std::to_string(x(r));
    }
    throw DegenerateInputError("subsystem " + std::to_string(i) + " at x=[" + s +
                               "]: " + e.what());
  }
}

}  // namespace detail

// u_i = Σ_j m̃_ij G_ij x_i and z_i = Σ_l w̃_il (C_il x_i + D_2il ω_i).
inline LocalSignals local_signals(const LargeScaleSystem& sys, const GainTable& g,
                                  std::size_t i, const Vector& x,
                                  const Vector& w) {
  const auto& sub = sys.subsystem(i);
  return detail::with_grade_context(i, x, [&] {
    const Vector wt = plant_grades(sub, x);
    const Vector mt = controller_grades(sys.controller(i), x);
    LocalSignals s{Vector::Zero(sub.m()), Vector::Zero(sub.n_z())};
    for (std::size_t j = 0; j < g[i].size(); ++j) {
      s.u.noalias() += mt(static_cast<Index>(j)) * (g[i][j] * x);
    }
    for (std::size_t l = 0; l < sub.p(); ++l) {
      const auto& r = sub.rule(l);
      s.z.noalias() += wt(static_cast<Index>(l)) * (r.C * x + r.D2 * w);
    }
    return s;
  });
}

// ẋ_i = Σ_l Σ_j h̃_ilj [(A_il + B_il G_ij) x_i + D_1il ω_i + Σ_k Ā_ikl x_k].
inline std::vector<Vector> closed_loop_derivative(const LargeScaleSystem& sys,
                                                  const GainTable& g,
                                                  const std::vector<Vector>& x,
                                                  const std::vector<Vector>& w,
                                                  double /*t*/) {
  detail::check_states(sys, x, w);
  std::vector<Vector> dx(sys.size());
  for (std::size_t i = 0; i < sys.size(); ++i) {
    const auto& sub = sys.subsystem(i);
    const Vector& xi = x[i];
    dx[i] = detail::with_grade_context(i, xi, [&] {
      const Vector wt = plant_grades(sub, xi);
      const Vector mt = controller_grades(sys.controller(i), xi);
      Vector u = Vector::Zero(sub.m());
      for (std::size_t j = 0; j < g[i].size(); ++j) {
        u.noalias() += mt(static_cast<Index>(j)) * (g[i][j] * xi);
      }
      Vector d = Vector::Zero(sub.n());
      for (std::size_t l = 0; l < sub.p(); ++l) {
        const auto& r = sub.rule(l);
        Vector term = r.A * xi + r.B * u + r.D1 * w[i];
        for (const auto& [k, abar] : r.interconnections) term.noalias() += abar * x[k];
        d.noalias() += wt(static_cast<Index>(l)) * term;
      }
      return d;
    });
  }
  return dx;
}

struct IntegrateOptions {
  double T = 20.0;
  double dt = 1e-3;
  double divergence_bound = 1e8;
};

// Fixed-step RK4. Stops early, keeping the samples so far, once the stacked
// state norm exceeds the divergence bound or becomes non-finite.
inline Trajectory integrate(const LargeScaleSystem& sys, const GainTable& g,
                            const std::vector<Vector>& x0,
                            const DisturbanceSpec& dist,
                            const IntegrateOptions& opt = {}) {
  if (!(opt.dt > 0.0) || !(opt.T >= opt.dt)) {
    throw InputError("integrate: need dt > 0 and T >= dt");
  }
  if (!(opt.divergence_bound > 0.0)) {
    throw InputError("integrate: divergence bound must be positive");
  }
  check_gains(sys, g);
  dist.validate(sys);
  detail::check_states(sys, x0, dist.at(0.0));

  const auto steps = static_cast<std::size_t>(std::llround(opt.T / opt.dt));
  const std::size_t n_sub = sys.size();
  std::vector<std::vector<double>> xs(n_sub), us(n_sub), zs(n_sub), ws(n_sub);
  Trajectory tr;
  tr.t.reserve(steps + 1);

  auto record = [&](double t, const std::vector<Vector>& x) {
    const auto w = dist.at(t);
    tr.t.push_back(t);
    for (std::size_t i = 0; i < n_sub; ++i) {
      const auto s = local_signals(sys, g, i, x[i], w[i]);
      xs[i].insert(xs[i].end(), x[i].data(), x[i].data() + x[i].size());
      us[i].insert(us[i].end(), s.u.data(), s.u.data() + s.u.size());
      zs[i].insert(zs[i].end(), s.z.data(), s.z.data() + s.z.size());
      ws[i].insert(ws[i].end(), w[i].data(), w[i].data() + w[i].size());
    }
  };
  auto norm = [](const std::vector<Vector>& x) {
    double s = 0.0;
    for (const auto& v : x) s += v.squaredNorm();
    return std::sqrt(s);
  };
  auto axpy = [](const std::vector<Vector>& x, double h,
                 const std::vector<Vector>& k) {
    std::vector<Vector> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] + h * k[i];
    return out;
  };

  std::vector<Vector> x = x0;
  record(0.0, x);
  for (std::size_t s = 0; s < steps; ++s) {
    const double t = static_cast<double>(s) * opt.dt;
    const double h = opt.dt;
    const auto k1 = closed_loop_derivative(sys, g, x, dist.at(t), t);
    const auto k2 = closed_loop_derivative(sys, g, axpy(x, h / 2, k1),
                                           dist.at(t + h / 2), t + h / 2);
    const auto k3 = closed_loop_derivative(sys, g, axpy(x, h / 2, k2),
                                           dist.at(t + h / 2), t + h / 2);
    const auto k4 = closed_loop_derivative(sys, g, axpy(x, h, k3),
                                           dist.at(t + h), t + h);
    for (std::size_t i = 0; i < n_sub; ++i) {
      x[i] += (h / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    const double tn = static_cast<double>(s + 1) * opt.dt;
    const double nx = norm(x);
    if (!std::isfinite(nx) || nx > opt.divergence_bound) {
      tr.diverged = true;
      tr.divergence_time = tn;
      break;
    }
    record(tn, x);
  }

  const auto k = static_cast<Index>(tr.t.size());
  auto pack = [k](const std::vector<double>& flat, Index cols) {
    Matrix m(k, cols);
    for (Index r = 0; r < k; ++r) {
      for (Index c = 0; c < cols; ++c) m(r, c) = flat[static_cast<std::size_t>(r * cols + c)];
    }
    return m;
  };
  for (std::size_t i = 0; i < n_sub; ++i) {
    const auto& sub = sys.subsystem(i);
    tr.x.push_back(pack(xs[i], sub.n()));
    tr.u.push_back(pack(us[i], sub.m()));
    tr.z.push_back(pack(zs[i], sub.n_z()));
    tr.w.push_back(pack(ws[i], sub.m_w()));
  }
  return tr;
}

// √(∫‖z‖² / ∫‖ω‖²) with trapezoidal quadrature over all subsystems.
inline double attenuation_ratio(const Trajectory& tr) {
  tr.validate();
  if (tr.samples() < 2) throw InputError("attenuation_ratio: too few samples");
  auto energy = [&](const std::vector<Matrix>& ch) {
    double acc = 0.0;
    for (std::size_t s = 1; s < tr.samples(); ++s) {
      double a = 0.0;
      double b = 0.0;
      for (const auto& m : ch) {
        a += m.row(static_cast<Index>(s - 1)).squaredNorm();
        b += m.row(static_cast<Index>(s)).squaredNorm();
      }
      acc += 0.5 * (tr.t[s] - tr.t[s - 1]) * (a + b);
    }
    return acc;
  };
  const double ew = energy(tr.w);
  if (!(ew > 0.0)) throw InputError("attenuation_ratio: disturbance has zero energy");
  return std::sqrt(energy(tr.z) / ew);
}

// V(t_k) = Σ_i x_iᵀ X_i⁻¹ x_i.
inline std::vector<double> lyapunov_trace(const Trajectory& tr,
                                          const std::vector<Matrix>& x_mats) {
  tr.validate();
  if (x_mats.size() != tr.subsystems()) {
    throw InputError("lyapunov_trace: one X per subsystem required");
  }
  std::vector<Eigen::LLT<Matrix>> fac;
  for (std::size_t i = 0; i < x_mats.size(); ++i) {
    require_shape(x_mats[i], tr.x[i].cols(), tr.x[i].cols(), "X");
    fac.emplace_back(x_mats[i]);
    if (fac.back().info() != Eigen::Success) {
      throw InputError("lyapunov_trace: X of subsystem " + std::to_string(i) +
                       " is not positive definite");
    }
  }
  std::vector<double> v(tr.samples(), 0.0);
  for (std::size_t s = 0; s < tr.samples(); ++s) {
    for (std::size_t i = 0; i < fac.size(); ++i) {
      const Vector xi = tr.x[i].row(static_cast<Index>(s)).transpose();
      v[s] += xi.dot(fac[i].solve(xi));
    }
  }
  return v;
}

}  // namespace it2lss
