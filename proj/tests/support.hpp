#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "it2lss/fuzzy_model.hpp"
#include "it2lss/linalg.hpp"

namespace it2lss::testing {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  double uniform(double lo = -1.0, double hi = 1.0) {
    return lo + (hi - lo) * (static_cast<double>(eng_() >> 11) * 0x1.0p-53);
  }
  std::size_t index(std::size_t n) { return static_cast<std::size_t>(eng_() % n); }

  Matrix matrix(Index r, Index c, double scale = 1.0) {
    Matrix m(r, c);
    for (Index i = 0; i < r; ++i)
      for (Index j = 0; j < c; ++j) m(i, j) = scale * uniform();
    return m;
  }
  Vector vector(Index n, double scale = 1.0) { return matrix(n, 1, scale).col(0); }

  Matrix symmetric(Index n, double scale = 1.0) {
    const Matrix a = matrix(n, n, scale);
    return 0.5 * (a + a.transpose());
  }
  // Eigenvalues at least `floor`.
  Matrix spd(Index n, double floor = 0.1) {
    const Matrix a = matrix(n, n);
    return a * a.transpose() + floor * Matrix::Identity(n, n);
  }

 private:
  std::mt19937_64 eng_;
};

// Smallest eigenvalue by a dense symmetric solver, independent of linalg.hpp.
inline double dense_min_eig(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (m + m.transpose()), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}
inline double dense_max_eig(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (m + m.transpose()), Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

// IT2 triangular set with a scaled lower function; never vanishes on |x| ≤ 1
// because the support is wide.
inline IT2Set wide_set(Rng& rng) {
  const double b = rng.uniform(-1.0, 1.0);
  const double a = b - rng.uniform(2.5, 4.0);
  const double c = b + rng.uniform(2.5, 4.0);
  const double h = rng.uniform(0.3, 0.95);
  return IT2Set(MembershipFn::triangular(a, b, c, h), MembershipFn::triangular(a, b, c, 1.0));
}

struct RandomShape {
  std::size_t subsystems = 2;
  Index n = 2, m = 1, m_w = 1, n_z = 1;
  std::size_t p = 2, c = 2;
  bool coupled = true;
  bool zero_d2 = false;
};

inline LargeScaleSystem random_system(Rng& rng, const RandomShape& s = {}) {
  std::vector<Subsystem> subs;
  std::vector<ControllerRuleBase> ctrls;
  for (std::size_t i = 0; i < s.subsystems; ++i) {
    std::vector<PlantRule> rules;
    for (std::size_t l = 0; l < s.p; ++l) {
      PlantRule r;
      r.A = rng.matrix(s.n, s.n);
      r.B = rng.matrix(s.n, s.m);
      r.D1 = rng.matrix(s.n, s.m_w);
      r.C = rng.matrix(s.n_z, s.n);
      r.D2 = s.zero_d2 ? Matrix(Matrix::Zero(s.n_z, s.m_w)) : rng.matrix(s.n_z, s.m_w, 0.3);
      if (s.coupled) {
        for (std::size_t k = 0; k < s.subsystems; ++k) {
          if (k != i) r.interconnections[k] = rng.matrix(s.n, s.n, 0.3);
        }
      }
      r.antecedents.push_back({0, wide_set(rng)});
      rules.push_back(std::move(r));
    }
    subs.emplace_back(i, s.n, s.m, s.m_w, s.n_z, std::move(rules),
                      constant_realization(rng.uniform(0.1, 0.9)));
    std::vector<ControllerRule> cr;
    for (std::size_t j = 0; j < s.c; ++j) cr.push_back({{Antecedent{0, wide_set(rng)}}});
    ctrls.emplace_back(std::move(cr), constant_realization(rng.uniform(0.1, 0.9)));
  }
  return LargeScaleSystem(std::move(subs), std::move(ctrls));
}

}  // namespace it2lss::testing
