#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "it2lss/errors.hpp"
#include "it2lss/linalg.hpp"

namespace it2lss::lmi {

using VarId = std::size_t;

enum class VarKind { kSymmetric, kRectangular };

struct DecisionVar {
  std::string name;
  VarKind kind = VarKind::kSymmetric;
  Index rows = 0;
  Index cols = 0;
  std::vector<int> tags;  // (i, l, j, z) as applicable

  // Number of free scalars: n(n+1)/2 for symmetric, rows·cols otherwise.
  Index scalar_count() const {
    return kind == VarKind::kSymmetric ? rows * (rows + 1) / 2 : rows * cols;
  }
};

class VarRegistry {
 public:
  VarId declare_symmetric(std::string name, Index n,
                          std::vector<int> tags = {}) {
    return declare({std::move(name), VarKind::kSymmetric, n, n,
                    std::move(tags)});
  }

  VarId declare_rectangular(std::string name, Index rows, Index cols,
                            std::vector<int> tags = {}) {
    return declare({std::move(name), VarKind::kRectangular, rows, cols,
                    std::move(tags)});
  }

  std::size_t size() const { return vars_.size(); }
  const DecisionVar& operator[](VarId id) const {
    if (id >= vars_.size()) {
      throw AssemblyError("undeclared decision variable id " +
                          std::to_string(id));
    }
    return vars_[id];
  }
  const std::vector<DecisionVar>& vars() const { return vars_; }

  VarId find(const std::string& name) const {
    auto it = by_name_.find(name);
    if (it == by_name_.end()) {
      throw AssemblyError("unknown decision variable '" + name + "'");
    }
    return it->second;
  }
  bool contains(const std::string& name) const {
    return by_name_.count(name) != 0;
  }

 private:
  VarId declare(DecisionVar v) {
    if (v.rows <= 0 || v.cols <= 0) {
      throw AssemblyError("decision variable '" + v.name +
                          "' needs positive dimensions");
    }
    if (by_name_.count(v.name)) {
      throw AssemblyError("duplicate decision variable '" + v.name + "'");
    }
    by_name_[v.name] = vars_.size();
    vars_.push_back(std::move(v));
    return vars_.size() - 1;
  }

  std::vector<DecisionVar> vars_;
  std::map<std::string, VarId> by_name_;
};

// Concrete values for every declared variable, indexed by VarId.
using VarValues = std::vector<Matrix>;

// Rectangular affine expression C + Σ Lₖ Vₖ Rₖ.
struct LinearTerm {
  VarId var = 0;
  Matrix left;
  Matrix right;
};

class AffineRect {
 public:
  AffineRect() = default;
  AffineRect(Index rows, Index cols) : constant_(Matrix::Zero(rows, cols)) {}

  Index rows() const { return constant_.rows(); }
  Index cols() const { return constant_.cols(); }
  const Matrix& constant() const { return constant_; }
  const std::vector<LinearTerm>& terms() const { return terms_; }

  AffineRect& add_constant(const Matrix& c) {
    require_shape(c, rows(), cols(), "AffineRect constant");
    constant_ += c;
    return *this;
  }
  AffineRect& add_term(Matrix left, VarId var, Matrix right) {
    if (left.rows() != rows() || right.cols() != cols()) {
      throw AssemblyError("AffineRect term has mismatched outer dimensions");
    }
    terms_.push_back({var, std::move(left), std::move(right)});
    return *this;
  }

  Matrix evaluate(const VarValues& values) const {
    Matrix out = constant_;
    for (const auto& t : terms_) {
      if (t.var >= values.size()) {
        throw AssemblyError("no value supplied for variable " +
                            std::to_string(t.var));
      }
      out.noalias() += t.left * values[t.var] * t.right;
    }
    return out;
  }

 private:
  Matrix constant_;
  std::vector<LinearTerm> terms_;
};

// Symmetric affine matrix on a square block grid. The represented value is
//   C + Σ (Lₖ Vₖ Rₖ + (Lₖ Vₖ Rₖ)ᵀ)
// in full coordinates, so every off-diagonal entry is mirrored structurally
// (the "*" entries of a block LMI never have to be written out).
class AffineBlockMatrix {
 public:
  AffineBlockMatrix() = default;
  explicit AffineBlockMatrix(std::vector<Index> block_sizes)
      : sizes_(std::move(block_sizes)) {
    offsets_.resize(sizes_.size());
    Index off = 0;
    for (std::size_t b = 0; b < sizes_.size(); ++b) {
      if (sizes_[b] < 0) throw AssemblyError("negative block size");
      offsets_[b] = off;
      off += sizes_[b];
    }
    constant_ = Matrix::Zero(off, off);
  }

  Index size() const { return constant_.rows(); }
  const std::vector<Index>& block_sizes() const { return sizes_; }
  Index block_offset(std::size_t b) const { return offsets_.at(b); }
  const Matrix& constant() const { return constant_; }
  const std::vector<LinearTerm>& halves() const { return halves_; }

  // Constant in block (r, c); for r ≠ c the mirror is implied.
  AffineBlockMatrix& add_constant(std::size_t r, std::size_t c,
                                  const Matrix& value) {
    check_block(r, c, value.rows(), value.cols());
    if (r == c) {
      if (!is_symmetric(value)) {
        throw AssemblyError("diagonal block constant must be symmetric");
      }
      constant_.block(offsets_[r], offsets_[c], sizes_[r], sizes_[c]) += value;
    } else {
      constant_.block(offsets_[r], offsets_[c], sizes_[r], sizes_[c]) += value;
      constant_.block(offsets_[c], offsets_[r], sizes_[c], sizes_[r]) +=
          value.transpose();
    }
    return *this;
  }

  // left·V·right placed in block (r, c). On the diagonal the product must be
  // symmetric for every value of V (e.g. V itself, or L V Lᵀ).
  AffineBlockMatrix& add_term(std::size_t r, std::size_t c, const Matrix& left,
                              VarId var, const Matrix& right) {
    check_block(r, c, left.rows(), right.cols());
    const double w = r == c ? 0.5 : 1.0;
    push_half(r, c, w * left, var, right);
    return *this;
  }

  // He(left·V·right) = left·V·right + (left·V·right)ᵀ in diagonal block r.
  AffineBlockMatrix& add_he(std::size_t r, const Matrix& left, VarId var,
                            const Matrix& right) {
    check_block(r, r, left.rows(), right.cols());
    push_half(r, r, left, var, right);
    return *this;
  }

  Matrix evaluate(const VarValues& values) const {
    Matrix out = constant_;
    for (const auto& t : halves_) {
      if (t.var >= values.size()) {
        throw AssemblyError("no value supplied for variable " +
                            std::to_string(t.var));
      }
      const Matrix prod = t.left * values[t.var] * t.right;
      out += prod + prod.transpose();
    }
    return out;
  }

  AffineBlockMatrix& operator*=(double s) {
    constant_ *= s;
    for (auto& t : halves_) t.left *= s;
    return *this;
  }

  AffineBlockMatrix& operator+=(const AffineBlockMatrix& other) {
    if (other.size() != size()) {
      throw AssemblyError("adding affine matrices of different sizes");
    }
    constant_ += other.constant_;
    halves_.insert(halves_.end(), other.halves_.begin(), other.halves_.end());
    return *this;
  }

  friend AffineBlockMatrix operator*(double s, AffineBlockMatrix m) {
    m *= s;
    return m;
  }
  friend AffineBlockMatrix operator+(AffineBlockMatrix a,
                                     const AffineBlockMatrix& b) {
    a += b;
    return a;
  }

  // Raw full-coordinate access used by the vectorizer and Schur lifting.
  void add_full_constant(const Matrix& c) { constant_ += c; }
  void add_full_half(Matrix left, VarId var, Matrix right) {
    if (left.rows() != size() || right.cols() != size()) {
      throw AssemblyError("full-coordinate term has wrong outer dimensions");
    }
    halves_.push_back({var, std::move(left), std::move(right)});
  }

 private:
  void check_block(std::size_t r, std::size_t c, Index rows, Index cols) const {
    if (r >= sizes_.size() || c >= sizes_.size()) {
      throw AssemblyError("block index out of range");
    }
    if (rows != sizes_[r] || cols != sizes_[c]) {
      throw AssemblyError("block (" + std::to_string(r) + "," +
                          std::to_string(c) + ") expects " +
                          std::to_string(sizes_[r]) + "x" +
                          std::to_string(sizes_[c]) + ", got " +
                          std::to_string(rows) + "x" + std::to_string(cols));
    }
  }

  void push_half(std::size_t r, std::size_t c, const Matrix& left, VarId var,
                 const Matrix& right) {
    Matrix gl = Matrix::Zero(size(), left.cols());
    gl.block(offsets_[r], 0, sizes_[r], left.cols()) = left;
    Matrix gr = Matrix::Zero(right.rows(), size());
    gr.block(0, offsets_[c], right.rows(), sizes_[c]) = right;
    halves_.push_back({var, std::move(gl), std::move(gr)});
  }

  std::vector<Index> sizes_;
  std::vector<Index> offsets_;
  Matrix constant_;
  std::vector<LinearTerm> halves_;
};

enum class Sense { kPositive, kPositiveSemi, kNegative, kNegativeSemi };

inline bool is_strict(Sense s) {
  return s == Sense::kPositive || s == Sense::kNegative;
}
// +1 when the constraint reads M ≻/⪰ 0, −1 for ≺/⪯.
inline double orientation(Sense s) {
  return (s == Sense::kPositive || s == Sense::kPositiveSemi) ? 1.0 : -1.0;
}

inline const char* to_string(Sense s) {
  switch (s) {
    case Sense::kPositive: return ">0";
    case Sense::kPositiveSemi: return ">=0";
    case Sense::kNegative: return "<0";
    case Sense::kNegativeSemi: return "<=0";
  }
  return "?";
}

struct Constraint {
  AffineBlockMatrix matrix;
  Sense sense = Sense::kNegative;
  double epsilon = 0.0;  // strictness margin, > 0 for strict senses
  std::string family;    // e.g. "vertex_negative"
  std::string label;     // e.g. "vertex_negative[i=0,k=3,corner=1,z=0]"
};

// max(1, largest absolute entry of the constant or of any coefficient).
inline double constraint_scale(const AffineBlockMatrix& m) {
  double s = 1.0;
  if (m.constant().size() > 0) s = std::max(s, m.constant().cwiseAbs().maxCoeff());
  return s;
}

inline Constraint make_constraint(AffineBlockMatrix matrix, Sense sense,
                                  std::string family, std::string label,
                                  double relative_epsilon = 1e-6) {
  Constraint c;
  c.epsilon = is_strict(sense) ? relative_epsilon * constraint_scale(matrix)
                               : 0.0;
  c.matrix = std::move(matrix);
  c.sense = sense;
  c.family = std::move(family);
  c.label = std::move(label);
  if (is_strict(sense) && !(c.epsilon > 0.0)) {
    throw AssemblyError("strict constraint needs a positive margin");
  }
  return c;
}

// A quadratic term ρ⁻¹ LᵀL with L affine in the decision variables.
struct QuadTerm {
  AffineRect factor;
  double weight = 1.0;  // ρ
};

// base + Σ ρ⁻¹ LᵀL ≺ 0  ⇔  [[base, Lᵀ], [L, −ρI]] ≺ 0 (one row block per
// term). The result is affine, so it can be handed to the LMI solver.
inline AffineBlockMatrix schur_linearize(const AffineBlockMatrix& base,
                                         const std::vector<QuadTerm>& quads) {
  for (const auto& q : quads) {
    if (!(q.weight > 0.0)) {
      throw InputError("schur_linearize: weights must be positive");
    }
    if (q.factor.cols() != base.size()) {
      throw AssemblyError("schur_linearize: factor width differs from base");
    }
  }
  if (quads.empty()) return base;

  std::vector<Index> sizes = {base.size()};
  for (const auto& q : quads) sizes.push_back(q.factor.rows());
  AffineBlockMatrix out(sizes);
  const Index s0 = base.size();
  const Index total = out.size();

  Matrix c = Matrix::Zero(total, total);
  c.topLeftCorner(s0, s0) = base.constant();
  for (const auto& h : base.halves()) {
    Matrix gl = Matrix::Zero(total, h.left.cols());
    gl.topRows(s0) = h.left;
    Matrix gr = Matrix::Zero(h.right.rows(), total);
    gr.leftCols(s0) = h.right;
    out.add_full_half(std::move(gl), h.var, std::move(gr));
  }
  for (std::size_t k = 0; k < quads.size(); ++k) {
    const auto& q = quads[k];
    const Index off = out.block_offset(k + 1);
    const Index r = q.factor.rows();
    c.block(off, 0, r, s0) += q.factor.constant();
    c.block(0, off, s0, r) += q.factor.constant().transpose();
    c.block(off, off, r, r) -= q.weight * Matrix::Identity(r, r);
    for (const auto& t : q.factor.terms()) {
      Matrix gl = Matrix::Zero(total, t.left.cols());
      gl.block(off, 0, r, t.left.cols()) = t.left;
      Matrix gr = Matrix::Zero(t.right.rows(), total);
      gr.leftCols(s0) = t.right;
      out.add_full_half(std::move(gl), t.var, std::move(gr));
    }
  }
  out.add_full_constant(c);
  return out;
}

// Tᵀ·m·T for a square T of matching size; preserves definiteness when T is
// invertible.
inline AffineBlockMatrix congruence(const AffineBlockMatrix& m, const Matrix& t) {
  if (t.rows() != m.size() || t.cols() != m.size()) {
    throw AssemblyError("congruence: transform has wrong size");
  }
  AffineBlockMatrix out(m.block_sizes());
  out.add_full_constant(t.transpose() * m.constant() * t);
  for (const auto& h : m.halves()) {
    out.add_full_half(t.transpose() * h.left, h.var, h.right * t);
  }
  return out;
}

inline QuadTerm congruence(const QuadTerm& q, const Matrix& t) {
  if (t.rows() != q.factor.cols()) {
    throw AssemblyError("congruence: transform has wrong size");
  }
  AffineRect f(q.factor.rows(), t.cols());
  f.add_constant(q.factor.constant() * t);
  for (const auto& term : q.factor.terms()) f.add_term(term.left, term.var, term.right * t);
  return {std::move(f), q.weight};
}

// Dense value of base + Σ ρ⁻¹ LᵀL.
inline Matrix evaluate_quadratic(const AffineBlockMatrix& base,
                                 const std::vector<QuadTerm>& quads,
                                 const VarValues& values) {
  Matrix out = base.evaluate(values);
  for (const auto& q : quads) {
    const Matrix l = q.factor.evaluate(values);
    out += (l.transpose() * l) / q.weight;
  }
  return out;
}

}  // namespace it2lss::lmi
