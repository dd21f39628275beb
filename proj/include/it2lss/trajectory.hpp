#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "it2lss/errors.hpp"
#include "it2lss/linalg.hpp"

namespace it2lss {

// Sampled closed-loop run. Row k of every channel matrix is time t[k];
// one matrix per subsystem and channel.
struct Trajectory {
  std::vector<double> t;
  std::vector<Matrix> x;
  std::vector<Matrix> u;
  std::vector<Matrix> z;
  std::vector<Matrix> w;
  bool diverged = false;
  double divergence_time = 0.0;

  std::size_t samples() const { return t.size(); }
  std::size_t subsystems() const { return x.size(); }

  double dt() const {
    if (t.size() < 2) throw InputError("trajectory has fewer than two samples");
    return t[1] - t[0];
  }

  // Stacked state [x_1; …; x_N] at sample k.
  Vector state(std::size_t k) const {
    Index total = 0;
    for (const auto& m : x) total += m.cols();
    Vector out(total);
    Index off = 0;
    for (const auto& m : x) {
      out.segment(off, m.cols()) = m.row(static_cast<Index>(k)).transpose();
      off += m.cols();
    }
    return out;
  }

  void validate() const {
    const auto k = static_cast<Index>(t.size());
    const std::size_t n = x.size();
    if (u.size() != n || z.size() != n || w.size() != n) {
      throw InputError("trajectory channels disagree on subsystem count");
    }
    for (std::size_t i = 0; i < n; ++i) {
      for (const Matrix* m : {&x[i], &u[i], &z[i], &w[i]}) {
        if (m->rows() != k) {
          throw InputError("trajectory channel row count differs from time grid");
        }
      }
    }
    if (t.size() >= 3) {
      const double h = t[1] - t[0];
      if (!(h > 0.0)) throw InputError("trajectory time grid is not increasing");
      for (std::size_t s = 1; s < t.size(); ++s) {
        const double d = t[s] - t[s - 1];
        if (std::abs(d - h) > 1e-9 * std::max(1.0, std::abs(t[s]))) {
          throw InputError("trajectory time grid is not uniform");
        }
      }
    }
  }
};

}  // namespace it2lss
