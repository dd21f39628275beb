#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <string>

#include "it2lss/errors.hpp"

namespace it2lss {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

inline Matrix he(const Matrix& a) { return a + a.transpose(); }

inline bool is_symmetric(const Matrix& a, double tol = 1e-10) {
  if (a.rows() != a.cols()) return false;
  if (a.size() == 0) return true;
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  return (a - a.transpose()).cwiseAbs().maxCoeff() <= tol * scale;
}

inline double min_eigenvalue(const Matrix& sym) {
  if (sym.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

inline double max_eigenvalue(const Matrix& sym) {
  if (sym.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(es.eigenvalues().size() - 1);
}

inline double spectral_norm(const Matrix& a) {
  if (a.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(a);
  return svd.singularValues()(0);
}

// Factor F with Fᵀ F = s for a symmetric positive semidefinite s. Rows
// belonging to numerically zero eigenvalues are dropped.
inline Matrix psd_factor(const Matrix& s, double tol = 1e-12) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(s);
  const Vector& ev = es.eigenvalues();
  const double scale = std::max(1.0, ev.cwiseAbs().maxCoeff());
  int keep = 0;
  for (Index k = 0; k < ev.size(); ++k) {
    if (ev(k) < -tol * scale) {
      throw InputError("psd_factor: matrix is not positive semidefinite");
    }
    if (ev(k) > tol * scale) ++keep;
  }
  Matrix f(keep, s.rows());
  int row = 0;
  for (Index k = 0; k < ev.size(); ++k) {
    if (ev(k) > tol * scale) {
      f.row(row++) = std::sqrt(ev(k)) * es.eigenvectors().col(k).transpose();
    }
  }
  return f;
}

inline void require_shape(const Matrix& a, Index rows, Index cols,
                          const std::string& what) {
  if (a.rows() != rows || a.cols() != cols) {
    throw InputError(what + ": expected " + std::to_string(rows) + "x" +
                     std::to_string(cols) + ", got " +
                     std::to_string(a.rows()) + "x" +
                     std::to_string(a.cols()));
  }
}

}  // namespace it2lss
