#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "it2lss/errors.hpp"
#include "it2lss/linalg.hpp"

namespace it2lss {

// ---------------------------------------------------------------------------
// Membership functions
// ---------------------------------------------------------------------------

class MembershipFn {
 public:
  struct Triangular {
    double a, b, c;
  };
  struct Trapezoidal {
    double a, b, c, d;
  };
  struct Gaussian {
    double center, width;
  };
  // Piecewise-linear through (breakpoints, grades), constant beyond the ends.
  struct Tabulated {
    std::vector<double> breakpoints;
    std::vector<double> grades;
  };
  using Shape = std::variant<Triangular, Trapezoidal, Gaussian, Tabulated>;

  static MembershipFn triangular(double a, double b, double c,
                                 double height = 1.0) {
    if (!(a <= b && b <= c) || a == c) {
      throw InputError("triangular membership needs a <= b <= c with a < c");
    }
    return MembershipFn(Triangular{a, b, c}, height);
  }

  static MembershipFn trapezoidal(double a, double b, double c, double d,
                                  double height = 1.0) {
    if (!(a <= b && b <= c && c <= d) || a == d) {
      throw InputError(
          "trapezoidal membership needs a <= b <= c <= d with a < d");
    }
    return MembershipFn(Trapezoidal{a, b, c, d}, height);
  }

  static MembershipFn gaussian(double center, double width,
                               double height = 1.0) {
    if (!(width > 0.0)) {
      throw InputError("gaussian membership needs a positive width");
    }
    return MembershipFn(Gaussian{center, width}, height);
  }

  static MembershipFn tabulated(std::vector<double> breakpoints,
                                std::vector<double> grades,
                                double height = 1.0) {
    if (breakpoints.empty() || breakpoints.size() != grades.size()) {
      throw InputError("tabulated membership needs matching, non-empty tables");
    }
    for (std::size_t k = 1; k < breakpoints.size(); ++k) {
      if (!(breakpoints[k] > breakpoints[k - 1])) {
        throw InputError(
            "tabulated membership breakpoints must be strictly increasing");
      }
    }
    for (double g : grades) {
      if (!(g >= 0.0 && g <= 1.0)) {
        throw InputError("tabulated membership grades must lie in [0, 1]");
      }
    }
    return MembershipFn(Tabulated{std::move(breakpoints), std::move(grades)},
                        height);
  }

  double operator()(double x) const {
    const double g = std::visit([x](const auto& s) { return eval(s, x); },
                                shape_);
    return height_ * std::clamp(g, 0.0, 1.0);
  }

  const Shape& shape() const { return shape_; }

  // Points where the function is not smooth (the peak for gaussians).
  std::vector<double> breakpoints() const {
    return std::visit(
        [](const auto& s) -> std::vector<double> {
          using T = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<T, Triangular>) return {s.a, s.b, s.c};
          else if constexpr (std::is_same_v<T, Trapezoidal>) return {s.a, s.b, s.c, s.d};
          else if constexpr (std::is_same_v<T, Gaussian>) return {s.center};
          else return s.breakpoints;
        },
        shape_);
  }
  double height() const { return height_; }

  // Interval outside of which the grade is constant.
  std::pair<double, double> support() const {
    return std::visit(
        [](const auto& s) -> std::pair<double, double> { return range(s); },
        shape_);
  }

 private:
  MembershipFn(Shape shape, double height)
      : shape_(std::move(shape)), height_(height) {
    if (!(height > 0.0 && height <= 1.0)) {
      throw InputError("membership height must lie in (0, 1]");
    }
  }

  static double eval(const Triangular& t, double x) {
    if (x < t.a || x > t.c) return 0.0;
    if (x == t.b) return 1.0;
    if (x < t.b) return (x - t.a) / (t.b - t.a);
    return (t.c - x) / (t.c - t.b);
  }
  static double eval(const Trapezoidal& t, double x) {
    if (x < t.a || x > t.d) return 0.0;
    if (x >= t.b && x <= t.c) return 1.0;
    if (x < t.b) return (x - t.a) / (t.b - t.a);
    return (t.d - x) / (t.d - t.c);
  }
  static double eval(const Gaussian& g, double x) {
    const double u = (x - g.center) / g.width;
    return std::exp(-0.5 * u * u);
  }
  static double eval(const Tabulated& t, double x) {
    const auto& bp = t.breakpoints;
    if (x <= bp.front()) return t.grades.front();
    if (x >= bp.back()) return t.grades.back();
    const auto it = std::upper_bound(bp.begin(), bp.end(), x);
    const auto k = static_cast<std::size_t>(it - bp.begin());
    const double s = (x - bp[k - 1]) / (bp[k] - bp[k - 1]);
    return (1.0 - s) * t.grades[k - 1] + s * t.grades[k];
  }

  static std::pair<double, double> range(const Triangular& t) {
    return {t.a, t.c};
  }
  static std::pair<double, double> range(const Trapezoidal& t) {
    return {t.a, t.d};
  }
  static std::pair<double, double> range(const Gaussian& g) {
    return {g.center - 8.0 * g.width, g.center + 8.0 * g.width};
  }
  static std::pair<double, double> range(const Tabulated& t) {
    return {t.breakpoints.front(), t.breakpoints.back()};
  }

  Shape shape_;
  double height_ = 1.0;
};

// Interval type-2 set: a lower and an upper membership function bounding the
// footprint of uncertainty.
class IT2Set {
 public:
  IT2Set(MembershipFn lower, MembershipFn upper)
      : lower_(std::move(lower)), upper_(std::move(upper)) {
    auto [l0, l1] = lower_.support();
    auto [u0, u1] = upper_.support();
    double lo = std::min(l0, u0);
    double hi = std::max(l1, u1);
    const double pad = 0.1 * std::max(hi - lo, 1.0);
    lo -= pad;
    hi += pad;
    constexpr int kGrid = 2001;
    for (int k = 0; k < kGrid; ++k) {
      const double x = lo + (hi - lo) * k / (kGrid - 1);
      if (lower_(x) > upper_(x) + 1e-12) {
        throw InputError("IT2 set has lower grade above upper grade at x = " +
                         std::to_string(x));
      }
    }
  }

  const MembershipFn& lower() const { return lower_; }
  const MembershipFn& upper() const { return upper_; }

 private:
  MembershipFn lower_;
  MembershipFn upper_;
};

struct Antecedent {
  std::size_t state_index = 0;
  IT2Set set;
};

// ---------------------------------------------------------------------------
// Type reduction
// ---------------------------------------------------------------------------

// Weights (α̲, ᾱ) or (β̲, β̄) blending lower and upper firing strengths.
struct TypeReduction {
  double lower = 0.5;
  double upper = 0.5;
};

using Realization =
    std::function<TypeReduction(const Vector& x, std::size_t rule)>;

inline Realization constant_realization(double lower = 0.5) {
  if (!(lower >= 0.0 && lower <= 1.0)) {
    throw InputError("type-reduction weight must lie in [0, 1]");
  }
  return [lower](const Vector&, std::size_t) {
    return TypeReduction{lower, 1.0 - lower};
  };
}

// ---------------------------------------------------------------------------
// Plant and controller rule bases
// ---------------------------------------------------------------------------

struct PlantRule {
  Matrix A;   // n × n
  Matrix B;   // n × m
  Matrix D1;  // n × m_w
  Matrix C;   // n_z × n
  Matrix D2;  // n_z × m_w
  // k → Ā_ikl, multiplying x_k in this subsystem's dynamics (n × n_k).
  std::map<std::size_t, Matrix> interconnections;
  std::vector<Antecedent> antecedents;
};

class Subsystem {
 public:
  Subsystem(std::size_t index, Index n, Index m, Index m_w, Index n_z,
            std::vector<PlantRule> rules,
            Realization alpha = constant_realization())
      : index_(index),
        n_(n),
        m_(m),
        m_w_(m_w),
        n_z_(n_z),
        rules_(std::move(rules)),
        alpha_(std::move(alpha)) {
    if (n <= 0 || m < 0 || m_w < 0 || n_z < 0) {
      throw InputError("subsystem dimensions must be positive");
    }
    if (rules_.empty()) throw InputError("subsystem needs at least one rule");
    if (!alpha_) throw InputError("subsystem alpha realization is empty");
    for (std::size_t l = 0; l < rules_.size(); ++l) {
      const auto& r = rules_[l];
      const std::string tag = "subsystem " + std::to_string(index) +
                              " rule " + std::to_string(l);
      require_shape(r.A, n, n, tag + " A");
      require_shape(r.B, n, m, tag + " B");
      require_shape(r.D1, n, m_w, tag + " D1");
      require_shape(r.C, n_z, n, tag + " C");
      require_shape(r.D2, n_z, m_w, tag + " D2");
      for (const auto& [k, mat] : r.interconnections) {
        if (k == index) {
          throw InputError(tag + ": interconnection key equals own index");
        }
        if (mat.rows() != n) {
          throw InputError(tag + ": interconnection row count must be n");
        }
      }
      for (const auto& a : r.antecedents) {
        if (static_cast<Index>(a.state_index) >= n) {
          throw InputError(tag + ": antecedent state index out of range");
        }
      }
    }
  }

  std::size_t index() const { return index_; }
  Index n() const { return n_; }
  Index m() const { return m_; }
  Index m_w() const { return m_w_; }
  Index n_z() const { return n_z_; }
  std::size_t p() const { return rules_.size(); }
  const std::vector<PlantRule>& rules() const { return rules_; }
  const PlantRule& rule(std::size_t l) const { return rules_.at(l); }
  const Realization& alpha() const { return alpha_; }

  Subsystem with_alpha(Realization alpha) const {
    return Subsystem(index_, n_, m_, m_w_, n_z_, rules_, std::move(alpha));
  }

 private:
  std::size_t index_;
  Index n_, m_, m_w_, n_z_;
  std::vector<PlantRule> rules_;
  Realization alpha_;
};

struct ControllerRule {
  std::vector<Antecedent> antecedents;
};

class ControllerRuleBase {
 public:
  explicit ControllerRuleBase(std::vector<ControllerRule> rules,
                              Realization beta = constant_realization())
      : rules_(std::move(rules)), beta_(std::move(beta)) {
    if (rules_.empty()) {
      throw InputError("controller rule base needs at least one rule");
    }
    if (!beta_) throw InputError("controller beta realization is empty");
  }

  std::size_t c() const { return rules_.size(); }
  const std::vector<ControllerRule>& rules() const { return rules_; }
  const Realization& beta() const { return beta_; }

  ControllerRuleBase with_beta(Realization beta) const {
    return ControllerRuleBase(rules_, std::move(beta));
  }

 private:
  std::vector<ControllerRule> rules_;
  Realization beta_;
};

class LargeScaleSystem {
 public:
  LargeScaleSystem(std::vector<Subsystem> subsystems,
                   std::vector<ControllerRuleBase> controllers)
      : subsystems_(std::move(subsystems)),
        controllers_(std::move(controllers)) {
    if (subsystems_.empty()) {
      throw InputError("large-scale system needs at least one subsystem");
    }
    if (controllers_.size() != subsystems_.size()) {
      throw InputError("one controller rule base per subsystem is required");
    }
    for (std::size_t i = 0; i < subsystems_.size(); ++i) {
      const auto& sub = subsystems_[i];
      if (sub.index() != i) {
        throw InputError("subsystem index does not match its position");
      }
      for (const auto& r : sub.rules()) {
        for (const auto& [k, mat] : r.interconnections) {
          if (k >= subsystems_.size()) {
            throw InputError("interconnection references subsystem " +
                             std::to_string(k) + " which does not exist");
          }
          require_shape(mat, sub.n(), subsystems_[k].n(),
                        "interconnection " + std::to_string(i) + "<-" +
                            std::to_string(k));
        }
      }
      for (const auto& cr : controllers_[i].rules()) {
        for (const auto& a : cr.antecedents) {
          if (static_cast<Index>(a.state_index) >= sub.n()) {
            throw InputError("controller antecedent state index out of range");
          }
        }
      }
    }
  }

  std::size_t size() const { return subsystems_.size(); }
  const Subsystem& subsystem(std::size_t i) const { return subsystems_.at(i); }
  const ControllerRuleBase& controller(std::size_t i) const {
    return controllers_.at(i);
  }
  const std::vector<Subsystem>& subsystems() const { return subsystems_; }
  const std::vector<ControllerRuleBase>& controllers() const {
    return controllers_;
  }
  Index total_states() const {
    Index t = 0;
    for (const auto& s : subsystems_) t += s.n();
    return t;
  }

 private:
  std::vector<Subsystem> subsystems_;
  std::vector<ControllerRuleBase> controllers_;
};

// ---------------------------------------------------------------------------
// Grade evaluation
// ---------------------------------------------------------------------------

struct FiringBounds {
  double lower = 0.0;
  double upper = 0.0;
};

namespace detail {

inline FiringBounds product_bounds(const std::vector<Antecedent>& ants,
                                   const Vector& x) {
  FiringBounds fb{1.0, 1.0};
  for (const auto& a : ants) {
    if (static_cast<Index>(a.state_index) >= x.size()) {
      throw InputError("antecedent refers to a state index beyond x");
    }
    const double v = x(static_cast<Index>(a.state_index));
    fb.lower *= a.set.lower()(v);
    fb.upper *= a.set.upper()(v);
  }
  return fb;
}

inline void check_reduction(const TypeReduction& tr, const char* what) {
  constexpr double kTol = 1e-12;
  if (tr.lower < -kTol || tr.lower > 1.0 + kTol || tr.upper < -kTol ||
      tr.upper > 1.0 + kTol || std::abs(tr.lower + tr.upper - 1.0) > 1e-9) {
    throw InputError(std::string(what) +
                     " weights must lie in [0,1] and sum to 1");
  }
}

inline Vector reduce_and_normalize(const std::vector<FiringBounds>& fb,
                                   const Realization& realization,
                                   const Vector& x, const char* what) {
  Vector g(static_cast<Index>(fb.size()));
  for (std::size_t r = 0; r < fb.size(); ++r) {
    const TypeReduction tr = realization(x, r);
    check_reduction(tr, what);
    g(static_cast<Index>(r)) = tr.lower * fb[r].lower + tr.upper * fb[r].upper;
  }
  const double total = g.sum();
  if (!(total > 0.0)) {
    throw DegenerateInputError(std::string(what) +
                               ": no rule fires at the given state");
  }
  return g / total;
}

}  // namespace detail

inline FiringBounds firing_bounds(const Subsystem& sub, std::size_t l,
                                  const Vector& x) {
  if (l >= sub.p()) throw InputError("firing_bounds: rule index out of range");
  if (x.size() != sub.n()) {
    throw InputError("firing_bounds: state dimension mismatch");
  }
  return detail::product_bounds(sub.rule(l).antecedents, x);
}

// Type-reduced, normalized plant grades w̃_il (sum to one).
inline Vector plant_grades(const Subsystem& sub, const Vector& x) {
  if (x.size() != sub.n()) {
    throw InputError("plant_grades: state dimension mismatch");
  }
  std::vector<FiringBounds> fb;
  fb.reserve(sub.p());
  for (std::size_t l = 0; l < sub.p(); ++l) {
    fb.push_back(detail::product_bounds(sub.rule(l).antecedents, x));
  }
  return detail::reduce_and_normalize(fb, sub.alpha(), x, "plant_grades");
}

inline Vector controller_grades(const ControllerRuleBase& rb, const Vector& x) {
  std::vector<FiringBounds> fb;
  fb.reserve(rb.c());
  for (const auto& r : rb.rules()) {
    fb.push_back(detail::product_bounds(r.antecedents, x));
  }
  return detail::reduce_and_normalize(fb, rb.beta(), x, "controller_grades");
}

// h̃_ilj = w̃_il · m̃_ij as a p × c table.
inline Matrix combined_grades(const LargeScaleSystem& sys, std::size_t i,
                              const Vector& x) {
  const Vector w = plant_grades(sys.subsystem(i), x);
  const Vector m = controller_grades(sys.controller(i), x);
  return w * m.transpose();
}

}  // namespace it2lss
