#pragma once

// Built-in two-state example on P = [0.1, 0.4]:
//   A(p) = [0 0.2p; 0.2 p],  B = [1; 1],  C = [1 1].

#include <cstddef>
#include <vector>

#include "lpvbound/core.hpp"

namespace lpv::example {

inline constexpr double kPMin = 0.1;
inline constexpr double kPMax = 0.4;

inline LpvModel two_state_model(int grid_points = 31) {
  Matrix a0 = Matrix::Zero(2, 2);
  a0(1, 0) = 0.2;
  Matrix a1 = Matrix::Zero(2, 2);
  a1(0, 1) = 0.2;
  a1(1, 1) = 1.0;
  const Matrix b = Matrix::Ones(2, 1);
  const Matrix c = Matrix::Ones(1, 2);
  return LpvModel(MatrixFamily::affine({a0, a1}), MatrixFamily::constant(b, 1),
                  MatrixFamily::constant(c, 1),
                  SchedulingBox::interval(kPMin, kPMax, grid_points));
}

// Piecewise-constant schedule with dwell 10: eight levels, switches at
// t = 10, 20, ..., 70 (0-based).
inline std::vector<Vector> switching_levels() {
  std::vector<Vector> v;
  for (double p : {0.1, 0.25, 0.4, 0.2, 0.35, 0.15, 0.3, 0.4}) v.push_back(Vector::Constant(1, p));
  return v;
}

inline constexpr std::size_t kSwitchingDelta = 10;
inline constexpr std::size_t kSwitchingHorizon = 79;
inline constexpr std::size_t kSinusoidHorizon = 100;

inline SchedulingSignal switching_schedule(const SchedulingBox& box) {
  return signal_piecewise_constant(box, kSwitchingDelta, switching_levels(), kSwitchingHorizon);
}

inline SchedulingSignal sinusoid_schedule(const SchedulingBox& box, double time_scale,
                                          std::size_t horizon = kSinusoidHorizon) {
  return signal_sinusoid(box, Vector::Constant(1, 0.3), Vector::Constant(1, 0.1), time_scale,
                         horizon);
}

}  // namespace lpv::example
