#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "it2lss/errors.hpp"
#include "it2lss/fuzzy_model.hpp"
#include "it2lss/linalg.hpp"

namespace it2lss {

// Axis-aligned operating box with a uniform grid of cells per dimension.
struct StateBox {
  std::vector<double> lower;
  std::vector<double> upper;
  std::vector<std::size_t> cells_per_dim;

  Index dims() const { return static_cast<Index>(lower.size()); }

  std::size_t cell_count() const {
    std::size_t q = 1;
    for (auto c : cells_per_dim) q *= c;
    return q;
  }

  void validate() const {
    if (lower.empty() || lower.size() != upper.size() ||
        lower.size() != cells_per_dim.size()) {
      throw InputError("state box needs matching lower/upper/grid sizes");
    }
    for (std::size_t r = 0; r < lower.size(); ++r) {
      if (!(lower[r] < upper[r])) {
        throw InputError("state box lower bound must be below upper bound");
      }
      if (cells_per_dim[r] < 1) {
        throw InputError("state box grid counts must be at least 1");
      }
    }
  }

  double width(std::size_t r) const {
    return (upper[r] - lower[r]) / static_cast<double>(cells_per_dim[r]);
  }
};

struct PartitionOptions {
  std::size_t tau = 0;  // sub-FOU count is tau + 1
  std::size_t samples_per_cell = 8;  // grid points per dimension per cell
  double margin = 1e-9;
};

// Multilinear tent weights of a point inside one cell. `v[r]` holds the
// weights of the lower and upper face along dimension r; they sum to one.
struct InterpWeights {
  std::size_t cell = 0;
  std::vector<std::array<double, 2>> v;

  std::size_t corner_count() const { return std::size_t{1} << v.size(); }

  // Corner bit r set ⇔ upper face along dimension r.
  double corner_weight(std::size_t corner) const {
    double w = 1.0;
    for (std::size_t r = 0; r < v.size(); ++r) {
      w *= v[r][(corner >> r) & 1U];
    }
    return w;
  }

  std::vector<double> corner_weights() const {
    std::vector<double> out(corner_count());
    for (std::size_t c = 0; c < out.size(); ++c) out[c] = corner_weight(c);
    return out;
  }
};

// δ̲/δ̄ tables of one subsystem, flat-indexed by (l, j, corner, cell, z).
class SubsystemPartition {
 public:
  SubsystemPartition() = default;
  SubsystemPartition(StateBox box, std::size_t p, std::size_t c,
                     std::size_t tau)
      : box_(std::move(box)), p_(p), c_(c), bands_(tau + 1) {
    box_.validate();
    corners_ = std::size_t{1} << box_.lower.size();
    const std::size_t total = p_ * c_ * corners_ * box_.cell_count() * bands_;
    delta_lower_.assign(total, 0.0);
    delta_upper_.assign(total, 1.0);
    const std::size_t cells = p_ * c_ * box_.cell_count();
    cell_min_.assign(cells, 1.0);
    cell_max_.assign(cells, 0.0);
  }

  const StateBox& box() const { return box_; }
  std::size_t p() const { return p_; }
  std::size_t c() const { return c_; }
  std::size_t q() const { return box_.cell_count(); }
  std::size_t corners() const { return corners_; }
  std::size_t bands() const { return bands_; }

  std::size_t flat(std::size_t l, std::size_t j, std::size_t corner,
                   std::size_t cell, std::size_t z) const {
    return (((l * c_ + j) * corners_ + corner) * q() + cell) * bands_ + z;
  }
  std::size_t cell_flat(std::size_t l, std::size_t j, std::size_t cell) const {
    return (l * c_ + j) * q() + cell;
  }

  double delta_lower(std::size_t l, std::size_t j, std::size_t corner,
                     std::size_t cell, std::size_t z) const {
    return delta_lower_.at(flat(l, j, corner, cell, z));
  }
  double delta_upper(std::size_t l, std::size_t j, std::size_t corner,
                     std::size_t cell, std::size_t z) const {
    return delta_upper_.at(flat(l, j, corner, cell, z));
  }
  void set_delta(std::size_t l, std::size_t j, std::size_t corner,
                 std::size_t cell, std::size_t z, double lo, double hi) {
    if (!(0.0 <= lo && lo <= hi && hi <= 1.0)) {
      throw PartitionError("delta bounds must satisfy 0 <= lower <= upper <= 1");
    }
    delta_lower_.at(flat(l, j, corner, cell, z)) = lo;
    delta_upper_.at(flat(l, j, corner, cell, z)) = hi;
  }

  double cell_min(std::size_t l, std::size_t j, std::size_t cell) const {
    return cell_min_.at(cell_flat(l, j, cell));
  }
  double cell_max(std::size_t l, std::size_t j, std::size_t cell) const {
    return cell_max_.at(cell_flat(l, j, cell));
  }
  void set_cell_range(std::size_t l, std::size_t j, std::size_t cell,
                      double lo, double hi) {
    cell_min_.at(cell_flat(l, j, cell)) = lo;
    cell_max_.at(cell_flat(l, j, cell)) = hi;
  }

  // Multi-index of a linear cell number, dimension 0 varying fastest.
  std::vector<std::size_t> cell_coords(std::size_t cell) const {
    std::vector<std::size_t> out(box_.cells_per_dim.size());
    for (std::size_t r = 0; r < out.size(); ++r) {
      out[r] = cell % box_.cells_per_dim[r];
      cell /= box_.cells_per_dim[r];
    }
    return out;
  }

  std::size_t cell_index(const std::vector<std::size_t>& coords) const {
    std::size_t k = 0;
    std::size_t stride = 1;
    for (std::size_t r = 0; r < coords.size(); ++r) {
      k += coords[r] * stride;
      stride *= box_.cells_per_dim[r];
    }
    return k;
  }

  // Corner point of a cell in state coordinates.
  Vector corner_point(std::size_t cell, std::size_t corner) const {
    const auto coords = cell_coords(cell);
    Vector x(box_.dims());
    for (std::size_t r = 0; r < coords.size(); ++r) {
      const std::size_t side = (corner >> r) & 1U;
      x(static_cast<Index>(r)) =
          box_.lower[r] + static_cast<double>(coords[r] + side) * box_.width(r);
    }
    return x;
  }

 private:
  StateBox box_;
  std::size_t p_ = 0, c_ = 0, bands_ = 1, corners_ = 1;
  std::vector<double> delta_lower_, delta_upper_;
  std::vector<double> cell_min_, cell_max_;
};

struct FouPartition {
  PartitionOptions options;
  std::vector<SubsystemPartition> subsystems;

  const SubsystemPartition& at(std::size_t i) const {
    if (i >= subsystems.size()) {
      throw InputError("partition has no entry for subsystem " +
                       std::to_string(i));
    }
    return subsystems[i];
  }
  std::size_t tau() const { return options.tau; }
};

// ---------------------------------------------------------------------------

namespace detail {

// Calls f(x) on a uniform grid of `per_dim` points per dimension spanning the
// closed cell (faces included), plus any `extra[r]` coordinates that fall
// inside the cell along dimension r.
template <class F>
void for_each_cell_sample(const SubsystemPartition& part, std::size_t cell,
                          std::size_t per_dim, F&& f,
                          const std::vector<std::vector<double>>& extra = {}) {
  const auto coords = part.cell_coords(cell);
  const auto& box = part.box();
  const std::size_t n = coords.size();
  std::vector<std::vector<double>> axes(n);
  for (std::size_t r = 0; r < n; ++r) {
    const double lo = box.lower[r] + static_cast<double>(coords[r]) * box.width(r);
    const double hi = lo + box.width(r);
    for (std::size_t t = 0; t < per_dim; ++t) {
      const double frac = per_dim == 1 ? 0.5
                                       : static_cast<double>(t) /
                                             static_cast<double>(per_dim - 1);
      axes[r].push_back(lo + frac * box.width(r));
    }
    if (r < extra.size()) {
      for (double v : extra[r]) {
        if (v > lo && v < hi) axes[r].push_back(v);
      }
      std::sort(axes[r].begin(), axes[r].end());
    }
  }
  std::vector<std::size_t> t(n, 0);
  Vector x(static_cast<Index>(n));
  while (true) {
    for (std::size_t r = 0; r < n; ++r) x(static_cast<Index>(r)) = axes[r][t[r]];
    f(x);
    std::size_t r = 0;
    while (r < n && ++t[r] == axes[r].size()) {
      t[r] = 0;
      ++r;
    }
    if (r == n) break;
  }
}

// Membership breakpoints of every plant and controller antecedent of
// subsystem i, grouped by state component.
inline std::vector<std::vector<double>> antecedent_kinks(const LargeScaleSystem& sys,
                                                         std::size_t i) {
  std::vector<std::vector<double>> out(static_cast<std::size_t>(sys.subsystem(i).n()));
  auto add = [&out](const std::vector<Antecedent>& ants) {
    for (const auto& a : ants) {
      for (const auto* f : {&a.set.lower(), &a.set.upper()}) {
        for (double v : f->breakpoints()) out.at(a.state_index).push_back(v);
      }
    }
  };
  for (const auto& r : sys.subsystem(i).rules()) add(r.antecedents);
  for (const auto& r : sys.controller(i).rules()) add(r.antecedents);
  return out;
}

}  // namespace detail

inline SubsystemPartition build_subsystem_partition(
    const LargeScaleSystem& sys, std::size_t i, const StateBox& box,
    const PartitionOptions& opts) {
  const auto& sub = sys.subsystem(i);
  if (box.dims() != sub.n()) {
    throw InputError("state box dimension differs from subsystem " +
                     std::to_string(i) + " state dimension");
  }
  if (opts.samples_per_cell < 8) {
    throw InputError("samples_per_cell must be at least 8");
  }
  const std::size_t p = sub.p();
  const std::size_t c = sys.controller(i).c();
  SubsystemPartition part(box, p, c, opts.tau);
  const auto kinks = detail::antecedent_kinks(sys, i);

  for (std::size_t k = 0; k < part.q(); ++k) {
    Matrix lo = Matrix::Constant(static_cast<Index>(p), static_cast<Index>(c),
                                 std::numeric_limits<double>::infinity());
    Matrix hi = -lo;
    detail::for_each_cell_sample(part, k, opts.samples_per_cell,
                                 [&](const Vector& x) {
      Matrix h;
      try {
        h = combined_grades(sys, i, x);
      } catch (const DegenerateInputError&) {
        std::string coords;
        for (auto v : part.cell_coords(k)) coords += std::to_string(v) + ",";
        throw PartitionError("subsystem " + std::to_string(i) + " cell " +
                             std::to_string(k) + " (" + coords +
                             "): membership grades undefined");
      }
      lo = lo.cwiseMin(h);
      hi = hi.cwiseMax(h);
    }, kinks);

    for (std::size_t l = 0; l < p; ++l) {
      for (std::size_t j = 0; j < c; ++j) {
        const double mn = lo(static_cast<Index>(l), static_cast<Index>(j));
        const double mx = hi(static_cast<Index>(l), static_cast<Index>(j));
        part.set_cell_range(l, j, k, mn, mx);
        const double band = (mx - mn) / static_cast<double>(part.bands());
        for (std::size_t z = 0; z < part.bands(); ++z) {
          const double b_lo = mn + band * static_cast<double>(z);
          const double b_hi =
              z + 1 == part.bands() ? mx : mn + band * static_cast<double>(z + 1);
          const double d_lo = std::clamp(b_lo - opts.margin, 0.0, 1.0);
          const double d_hi = std::clamp(b_hi + opts.margin, 0.0, 1.0);
          for (std::size_t corner = 0; corner < part.corners(); ++corner) {
            part.set_delta(l, j, corner, k, z, d_lo, d_hi);
          }
        }
      }
    }
  }
  return part;
}

// One box per subsystem.
inline FouPartition build_partition(const LargeScaleSystem& sys,
                                    const std::vector<StateBox>& boxes,
                                    const PartitionOptions& opts = {}) {
  if (boxes.size() != sys.size()) {
    throw InputError("build_partition needs one state box per subsystem");
  }
  FouPartition out;
  out.options = opts;
  for (std::size_t i = 0; i < sys.size(); ++i) {
    out.subsystems.push_back(build_subsystem_partition(sys, i, boxes[i], opts));
  }
  return out;
}

inline FouPartition build_partition(const LargeScaleSystem& sys,
                                    const StateBox& box,
                                    const PartitionOptions& opts = {}) {
  return build_partition(sys, std::vector<StateBox>(sys.size(), box), opts);
}

inline InterpWeights interp_weights(const SubsystemPartition& part,
                                    const Vector& x) {
  const auto& box = part.box();
  if (x.size() != box.dims()) {
    throw InputError("interp_weights: state dimension mismatch");
  }
  InterpWeights w;
  std::vector<std::size_t> coords(box.lower.size());
  w.v.resize(box.lower.size());
  for (std::size_t r = 0; r < coords.size(); ++r) {
    const double xr = x(static_cast<Index>(r));
    const double span = box.upper[r] - box.lower[r];
    const double tol = 1e-12 * std::max(1.0, span);
    if (xr < box.lower[r] - tol || xr > box.upper[r] + tol) {
      throw ExtrapolationError("state component " + std::to_string(r) +
                               " = " + std::to_string(xr) +
                               " lies outside the partitioned box");
    }
    const double u = (xr - box.lower[r]) / box.width(r);
    const auto cells = box.cells_per_dim[r];
    std::size_t kr = u <= 0.0 ? 0 : static_cast<std::size_t>(std::floor(u));
    kr = std::min(kr, cells - 1);
    const double s = std::clamp(u - static_cast<double>(kr), 0.0, 1.0);
    coords[r] = kr;
    w.v[r] = {1.0 - s, s};
  }
  w.cell = part.cell_index(coords);
  return w;
}

inline InterpWeights interp_weights(const FouPartition& part, std::size_t i,
                                    const Vector& x) {
  return interp_weights(part.at(i), x);
}

struct GradeBounds {
  double lower = 0.0;
  double upper = 1.0;
};

// Multilinear interpolation of the corner constants of the containing cell.
inline GradeBounds reconstruct_bounds(const FouPartition& part, std::size_t i,
                                      const Vector& x, std::size_t l,
                                      std::size_t j, std::size_t z) {
  const auto& sp = part.at(i);
  if (l >= sp.p() || j >= sp.c() || z >= sp.bands()) {
    throw InputError("reconstruct_bounds: index out of range");
  }
  const InterpWeights w = interp_weights(sp, x);
  GradeBounds b{0.0, 0.0};
  for (std::size_t corner = 0; corner < sp.corners(); ++corner) {
    const double cw = w.corner_weight(corner);
    b.lower += cw * sp.delta_lower(l, j, corner, w.cell, z);
    b.upper += cw * sp.delta_upper(l, j, corner, w.cell, z);
  }
  return b;
}

struct EnvelopeAudit {
  std::size_t samples = 0;
  // min over samples and indices of min(h̃ − h̲, h̄ − h̃) for the active band
  double min_margin = std::numeric_limits<double>::infinity();
  std::size_t worst_subsystem = 0;
  Vector worst_state;
};

// Re-samples every cell at `density` times the build resolution and checks
// that h̃ lies inside the reconstructed envelope of some sub-FOU band.
inline EnvelopeAudit audit_envelope(const LargeScaleSystem& sys,
                                    const FouPartition& part,
                                    std::size_t density = 10) {
  EnvelopeAudit audit;
  const std::size_t per_dim =
      (part.options.samples_per_cell - 1) * density + 1;
  for (std::size_t i = 0; i < sys.size(); ++i) {
    const auto& sp = part.at(i);
    for (std::size_t k = 0; k < sp.q(); ++k) {
      detail::for_each_cell_sample(sp, k, per_dim, [&](const Vector& x) {
        const Matrix h = combined_grades(sys, i, x);
        const InterpWeights w = interp_weights(sp, x);
        ++audit.samples;
        for (std::size_t l = 0; l < sp.p(); ++l) {
          for (std::size_t j = 0; j < sp.c(); ++j) {
            const double hv = h(static_cast<Index>(l), static_cast<Index>(j));
            double best = -std::numeric_limits<double>::infinity();
            for (std::size_t z = 0; z < sp.bands(); ++z) {
              double lo = 0.0, hi = 0.0;
              for (std::size_t corner = 0; corner < sp.corners(); ++corner) {
                const double cw = w.corner_weight(corner);
                lo += cw * sp.delta_lower(l, j, corner, w.cell, z);
                hi += cw * sp.delta_upper(l, j, corner, w.cell, z);
              }
              best = std::max(best, std::min(hv - lo, hi - hv));
            }
            if (best < audit.min_margin) {
              audit.min_margin = best;
              audit.worst_subsystem = i;
              audit.worst_state = x;
            }
          }
        }
      });
    }
  }
  return audit;
}

}  // namespace it2lss
