#pragma once

#include <algorithm>
#include <limits>

#include <Eigen/Dense>

#include "lpvbound/core.hpp"

namespace lpv {

inline Vector singular_values(const Matrix& m) {
  if (m.size() == 0) return Vector();
  return Eigen::JacobiSVD<Matrix>(m).singularValues();
}

// Induced 2-norm.
inline double spectral_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  return singular_values(m)(0);
}

inline double condition_number(const Matrix& m) {
  const Vector s = singular_values(m);
  if (s.size() == 0) return 1.0;
  const double smin = s(s.size() - 1);
  if (smin == 0.0) return std::numeric_limits<double>::infinity();
  return s(0) / smin;
}

// max(1, ||ref||_2)-scaled 2-norm distance, used for similarity residuals.
inline double scaled_residual(const Matrix& value, const Matrix& ref) {
  return spectral_norm(value - ref) / std::max(1.0, spectral_norm(ref));
}

inline double relative_frobenius_error(const Matrix& value, const Matrix& ref) {
  const double denom = ref.norm();
  return denom == 0.0 ? (value - ref).norm() : (value - ref).norm() / denom;
}

inline double max_abs(const Matrix& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

}  // namespace lpv
