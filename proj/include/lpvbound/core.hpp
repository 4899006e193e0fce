#pragma once

// Domain types for discrete-time LTI/LPV state-space models, finite-horizon
// signals and their exact simulation.
//
//   x(t+1) = A(p(t)) x(t) + B(p(t)) u(t)
//   y(t)   = C(p(t)) x(t)

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "lpvbound/errors.hpp"

namespace lpv {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline std::string shape_string(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

// Compact scheduling set P = [p_min, p_max] (componentwise) together with
// the tensor grid used to approximate suprema over P.
class SchedulingBox {
 public:
  SchedulingBox() = default;

  SchedulingBox(Vector p_min, Vector p_max, int grid_points_per_axis = 31)
      : p_min_(std::move(p_min)),
        p_max_(std::move(p_max)),
        grid_points_(grid_points_per_axis) {
    if (p_min_.size() != p_max_.size() || p_min_.size() == 0) {
      throw DimensionError("SchedulingBox: p_min/p_max dimension mismatch");
    }
    for (Eigen::Index i = 0; i < p_min_.size(); ++i) {
      if (!(p_min_(i) <= p_max_(i)) || !std::isfinite(p_min_(i)) ||
          !std::isfinite(p_max_(i))) {
        throw std::invalid_argument("SchedulingBox: p_min > p_max on axis " +
                                    std::to_string(i));
      }
    }
    if (grid_points_ < 2) {
      throw std::invalid_argument(
          "SchedulingBox: grid_points_per_axis must be >= 2");
    }
  }

  static SchedulingBox interval(double lo, double hi, int grid_points = 31) {
    return SchedulingBox(Vector::Constant(1, lo), Vector::Constant(1, hi),
                         grid_points);
  }

  int dim() const { return static_cast<int>(p_min_.size()); }
  const Vector& p_min() const { return p_min_; }
  const Vector& p_max() const { return p_max_; }
  int grid_points_per_axis() const { return grid_points_; }

  SchedulingBox with_grid(int grid_points) const {
    return SchedulingBox(p_min_, p_max_, grid_points);
  }

  double diameter() const { return (p_max_ - p_min_).norm(); }

  bool contains(const Vector& p) const {
    if (p.size() != p_min_.size()) return false;
    for (Eigen::Index i = 0; i < p.size(); ++i) {
      const double slack = 1e-12 * (1.0 + std::abs(p_min_(i)) + std::abs(p_max_(i)));
      if (!(p(i) >= p_min_(i) - slack && p(i) <= p_max_(i) + slack)) {
        return false;
      }
    }
    return true;
  }

  void require(const Vector& p, const char* who) const {
    if (p.size() != p_min_.size()) {
      throw DimensionError(std::string(who) + ": scheduling value has dimension " +
                           std::to_string(p.size()) + ", expected " +
                           std::to_string(p_min_.size()));
    }
    if (!contains(p)) {
      throw DomainError(std::string(who) + ": scheduling value outside the box");
    }
  }

  // Axis nodes; a degenerate axis (p_min == p_max) has a single node.
  std::vector<double> axis_nodes(int axis) const {
    const double lo = p_min_(axis);
    const double hi = p_max_(axis);
    if (lo == hi) return {lo};
    std::vector<double> nodes(static_cast<std::size_t>(grid_points_));
    for (int k = 0; k < grid_points_; ++k) {
      nodes[static_cast<std::size_t>(k)] =
          lo + (hi - lo) * static_cast<double>(k) / (grid_points_ - 1);
    }
    nodes.back() = hi;
    return nodes;
  }

  std::vector<std::vector<double>> all_axis_nodes() const {
    std::vector<std::vector<double>> out;
    for (int a = 0; a < dim(); ++a) out.push_back(axis_nodes(a));
    return out;
  }

  // Tensor-product grid, last axis varying fastest.
  std::vector<Vector> grid() const { return tensor_grid(all_axis_nodes()); }

  static std::vector<Vector> tensor_grid(
      const std::vector<std::vector<double>>& axes) {
    std::size_t total = 1;
    for (const auto& ax : axes) total *= ax.size();
    std::vector<Vector> pts;
    pts.reserve(total);
    std::vector<std::size_t> idx(axes.size(), 0);
    for (std::size_t n = 0; n < total; ++n) {
      Vector p(static_cast<Eigen::Index>(axes.size()));
      for (std::size_t a = 0; a < axes.size(); ++a) {
        p(static_cast<Eigen::Index>(a)) = axes[a][idx[a]];
      }
      pts.push_back(std::move(p));
      for (std::size_t a = axes.size(); a-- > 0;) {
        if (++idx[a] < axes[a].size()) break;
        idx[a] = 0;
      }
    }
    return pts;
  }

 private:
  Vector p_min_;
  Vector p_max_;
  int grid_points_ = 31;
};

// Continuous map p -> matrix. Either affine, M0 + sum_i p_i M_i, or
// multilinear interpolation of matrices stored at tensor-grid nodes.
class MatrixFamily {
 public:
  struct Affine {
    std::vector<Matrix> coefficients;  // M0, M1, ..., M_np
  };
  struct GridInterp {
    std::vector<std::vector<double>> nodes;  // strictly increasing, per axis
    std::vector<Matrix> values;              // row-major, last axis fastest
  };

  MatrixFamily() = default;

  static MatrixFamily affine(std::vector<Matrix> coefficients) {
    if (coefficients.empty()) {
      throw std::invalid_argument("MatrixFamily::affine: no coefficients");
    }
    const auto r = coefficients.front().rows();
    const auto c = coefficients.front().cols();
    for (const auto& m : coefficients) {
      if (m.rows() != r || m.cols() != c) {
        throw DimensionError("MatrixFamily::affine: coefficient shapes differ (" +
                             shape_string(coefficients.front()) + " vs " +
                             shape_string(m) + ")");
      }
    }
    MatrixFamily f;
    f.rep_ = Affine{std::move(coefficients)};
    return f;
  }

  static MatrixFamily constant(const Matrix& m, int n_p) {
    std::vector<Matrix> coeffs(static_cast<std::size_t>(n_p) + 1,
                               Matrix::Zero(m.rows(), m.cols()));
    coeffs[0] = m;
    return affine(std::move(coeffs));
  }

  static MatrixFamily grid(std::vector<std::vector<double>> nodes,
                           std::vector<Matrix> values) {
    if (nodes.empty()) {
      throw std::invalid_argument("MatrixFamily::grid: no axes");
    }
    std::size_t total = 1;
    for (const auto& ax : nodes) {
      if (ax.empty()) {
        throw std::invalid_argument("MatrixFamily::grid: empty axis");
      }
      for (std::size_t k = 1; k < ax.size(); ++k) {
        if (!(ax[k] > ax[k - 1])) {
          throw std::invalid_argument(
              "MatrixFamily::grid: nodes must be strictly increasing");
        }
      }
      total *= ax.size();
    }
    if (values.size() != total) {
      throw DimensionError("MatrixFamily::grid: expected " +
                           std::to_string(total) + " node matrices, got " +
                           std::to_string(values.size()));
    }
    for (const auto& m : values) {
      if (m.rows() != values.front().rows() || m.cols() != values.front().cols()) {
        throw DimensionError("MatrixFamily::grid: node matrix shapes differ");
      }
    }
    MatrixFamily f;
    f.rep_ = GridInterp{std::move(nodes), std::move(values)};
    return f;
  }

  bool is_affine() const { return std::holds_alternative<Affine>(rep_); }
  const Affine& as_affine() const { return std::get<Affine>(rep_); }
  const GridInterp& as_grid() const { return std::get<GridInterp>(rep_); }

  Eigen::Index rows() const { return first().rows(); }
  Eigen::Index cols() const { return first().cols(); }

  int n_p() const {
    if (is_affine()) return static_cast<int>(as_affine().coefficients.size()) - 1;
    return static_cast<int>(as_grid().nodes.size());
  }

  // Evaluation without a box check; grid families reject points outside
  // their node hull.
  Matrix evaluate(const Vector& p) const {
    if (p.size() != n_p()) {
      throw DimensionError("MatrixFamily: scheduling dimension " +
                           std::to_string(p.size()) + ", expected " +
                           std::to_string(n_p()));
    }
    if (is_affine()) {
      const auto& c = as_affine().coefficients;
      Matrix out = c[0];
      for (Eigen::Index i = 0; i < p.size(); ++i) {
        out.noalias() += p(i) * c[static_cast<std::size_t>(i) + 1];
      }
      return out;
    }
    return interpolate(as_grid(), p);
  }

 private:
  const Matrix& first() const {
    if (is_affine()) return as_affine().coefficients.front();
    return as_grid().values.front();
  }

  static Matrix interpolate(const GridInterp& g, const Vector& p) {
    const std::size_t n_axes = g.nodes.size();
    std::vector<std::size_t> lower(n_axes);
    std::vector<double> weight(n_axes);
    std::vector<std::size_t> stride(n_axes);
    std::size_t s = 1;
    for (std::size_t a = n_axes; a-- > 0;) {
      stride[a] = s;
      s *= g.nodes[a].size();
    }
    for (std::size_t a = 0; a < n_axes; ++a) {
      const auto& ax = g.nodes[a];
      const double x = p(static_cast<Eigen::Index>(a));
      const double slack = 1e-12 * (1.0 + std::abs(ax.front()) + std::abs(ax.back()));
      if (!(x >= ax.front() - slack && x <= ax.back() + slack)) {
        throw DomainError("MatrixFamily: scheduling value outside grid nodes");
      }
      if (ax.size() == 1) {
        lower[a] = 0;
        weight[a] = 0.0;
        continue;
      }
      auto it = std::upper_bound(ax.begin(), ax.end(), x);
      std::size_t j = it == ax.begin() ? 0 : static_cast<std::size_t>(it - ax.begin()) - 1;
      j = std::min(j, ax.size() - 2);
      lower[a] = j;
      weight[a] = std::clamp((x - ax[j]) / (ax[j + 1] - ax[j]), 0.0, 1.0);
    }
    Matrix out = Matrix::Zero(g.values.front().rows(), g.values.front().cols());
    const std::size_t corners = std::size_t{1} << n_axes;
    for (std::size_t mask = 0; mask < corners; ++mask) {
      double w = 1.0;
      std::size_t flat = 0;
      bool skip = false;
      for (std::size_t a = 0; a < n_axes; ++a) {
        const bool upper = (mask >> a) & 1U;
        if (g.nodes[a].size() == 1) {
          if (upper) {
            skip = true;
            break;
          }
          continue;
        }
        w *= upper ? weight[a] : 1.0 - weight[a];
        flat += (lower[a] + (upper ? 1 : 0)) * stride[a];
      }
      if (skip || w == 0.0) continue;
      out.noalias() += w * g.values[flat];
    }
    return out;
  }

  std::variant<Affine, GridInterp> rep_;
};

inline Matrix eval_family(const MatrixFamily& f, const SchedulingBox& box,
                          const Vector& p) {
  box.require(p, "eval_family");
  return f.evaluate(p);
}

struct LtiModel {
  Matrix A;
  Matrix B;
  Matrix C;

  Eigen::Index n_x() const { return A.rows(); }
  Eigen::Index n_u() const { return B.cols(); }
  Eigen::Index n_y() const { return C.rows(); }

  void validate() const {
    if (A.rows() != A.cols() || B.rows() != A.rows() || C.cols() != A.rows()) {
      throw DimensionError("LtiModel: inconsistent shapes A " + shape_string(A) +
                           ", B " + shape_string(B) + ", C " + shape_string(C));
    }
  }
};

class LpvModel {
 public:
  LpvModel() = default;

  LpvModel(MatrixFamily A, MatrixFamily B, MatrixFamily C, SchedulingBox box)
      : A_(std::move(A)), B_(std::move(B)), C_(std::move(C)), box_(std::move(box)) {
    if (A_.rows() != A_.cols() || B_.rows() != A_.rows() ||
        C_.cols() != A_.rows()) {
      throw DimensionError("LpvModel: family shapes are inconsistent");
    }
    if (A_.n_p() != box_.dim() || B_.n_p() != box_.dim() ||
        C_.n_p() != box_.dim()) {
      throw DimensionError("LpvModel: family scheduling dimension differs from box");
    }
  }

  // Model whose matrices do not depend on p.
  static LpvModel constant(const LtiModel& l, const SchedulingBox& box) {
    l.validate();
    return LpvModel(MatrixFamily::constant(l.A, box.dim()),
                    MatrixFamily::constant(l.B, box.dim()),
                    MatrixFamily::constant(l.C, box.dim()), box);
  }

  const MatrixFamily& A() const { return A_; }
  const MatrixFamily& B() const { return B_; }
  const MatrixFamily& C() const { return C_; }
  const SchedulingBox& box() const { return box_; }

  Eigen::Index n_x() const { return A_.rows(); }
  Eigen::Index n_u() const { return B_.cols(); }
  Eigen::Index n_y() const { return C_.rows(); }
  int n_p() const { return box_.dim(); }

  LpvModel with_box(const SchedulingBox& box) const {
    return LpvModel(A_, B_, C_, box);
  }

  LtiModel freeze(const Vector& p) const {
    box_.require(p, "freeze");
    return LtiModel{A_.evaluate(p), B_.evaluate(p), C_.evaluate(p)};
  }

 private:
  MatrixFamily A_;
  MatrixFamily B_;
  MatrixFamily C_;
  SchedulingBox box_;
};

inline LtiModel freeze(const LpvModel& sigma, const Vector& p) {
  return sigma.freeze(p);
}

// p(0..T), every sample inside the box.
class SchedulingSignal {
 public:
  SchedulingSignal() = default;
  SchedulingSignal(const SchedulingBox& box, std::vector<Vector> samples)
      : samples_(std::move(samples)) {
    if (samples_.empty()) {
      throw std::invalid_argument("SchedulingSignal: empty");
    }
    for (const auto& p : samples_) box.require(p, "SchedulingSignal");
  }

  const std::vector<Vector>& samples() const { return samples_; }
  const Vector& operator[](std::size_t t) const { return samples_[t]; }
  std::size_t size() const { return samples_.size(); }
  // T, the index of the last sample.
  std::size_t horizon() const { return samples_.size() - 1; }

 private:
  std::vector<Vector> samples_;
};

enum class InputNorm { kLinf, kL2 };

// u(0..T) with cached sup-norm and l2 norm over the horizon.
class InputSignal {
 public:
  InputSignal() = default;
  explicit InputSignal(std::vector<Vector> samples) : samples_(std::move(samples)) {
    if (samples_.empty()) throw std::invalid_argument("InputSignal: empty");
    double sq = 0.0;
    for (const auto& u : samples_) {
      if (u.size() != samples_.front().size()) {
        throw DimensionError("InputSignal: sample dimensions differ");
      }
      linf_ = std::max(linf_, u.norm());
      sq += u.squaredNorm();
    }
    l2_ = std::sqrt(sq);
  }

  static InputSignal constant(const Vector& value, std::size_t horizon) {
    return InputSignal(std::vector<Vector>(horizon + 1, value));
  }

  const std::vector<Vector>& samples() const { return samples_; }
  const Vector& operator[](std::size_t t) const { return samples_[t]; }
  std::size_t size() const { return samples_.size(); }
  std::size_t horizon() const { return samples_.size() - 1; }
  Eigen::Index dim() const { return samples_.front().size(); }
  double linf() const { return linf_; }
  double l2() const { return l2_; }
  double norm(InputNorm which) const { return which == InputNorm::kLinf ? linf_ : l2_; }

  InputSignal combined(double a, const InputSignal& other, double b) const {
    if (other.size() != size()) throw DimensionError("InputSignal: horizon mismatch");
    std::vector<Vector> out(size());
    for (std::size_t t = 0; t < size(); ++t) out[t] = a * samples_[t] + b * other[t];
    return InputSignal(std::move(out));
  }

 private:
  std::vector<Vector> samples_;
  double linf_ = 0.0;
  double l2_ = 0.0;
};

// states x(0..T+1), outputs y(0..T).
struct Trajectory {
  std::vector<Vector> states;
  std::vector<Vector> outputs;
};

inline Trajectory simulate_lti(const LtiModel& l, const InputSignal& u,
                               const Vector& x0) {
  l.validate();
  if (x0.size() != l.n_x() || u.dim() != l.n_u()) {
    throw DimensionError("simulate_lti: x0 or input dimension mismatch");
  }
  Trajectory tr;
  tr.states.reserve(u.size() + 1);
  tr.outputs.reserve(u.size());
  tr.states.push_back(x0);
  for (std::size_t t = 0; t < u.size(); ++t) {
    const Vector& x = tr.states.back();
    tr.outputs.push_back(l.C * x);
    tr.states.push_back(l.A * x + l.B * u[t]);
  }
  return tr;
}

inline Trajectory simulate_lpv(const LpvModel& sigma, const InputSignal& u,
                               const SchedulingSignal& p, const Vector& x0) {
  if (u.size() != p.size()) {
    throw DimensionError("simulate_lpv: input horizon " + std::to_string(u.horizon()) +
                         " differs from scheduling horizon " +
                         std::to_string(p.horizon()));
  }
  if (x0.size() != sigma.n_x() || u.dim() != sigma.n_u()) {
    throw DimensionError("simulate_lpv: x0 or input dimension mismatch");
  }
  Trajectory tr;
  tr.states.reserve(u.size() + 1);
  tr.outputs.reserve(u.size());
  tr.states.push_back(x0);
  for (std::size_t t = 0; t < u.size(); ++t) {
    const LtiModel l = sigma.freeze(p[t]);
    const Vector& x = tr.states.back();
    tr.outputs.push_back(l.C * x);
    tr.states.push_back(l.A * x + l.B * u[t]);
  }
  return tr;
}

// Input-output map: outputs from zero initial state.
inline std::vector<Vector> io_map(const LpvModel& sigma, const InputSignal& u,
                                  const SchedulingSignal& p) {
  return simulate_lpv(sigma, u, p, Vector::Zero(sigma.n_x())).outputs;
}

inline SchedulingSignal signal_piecewise_constant(const SchedulingBox& box,
                                                  std::size_t delta,
                                                  const std::vector<Vector>& values,
                                                  std::size_t horizon) {
  if (delta < 1) throw std::invalid_argument("signal_piecewise_constant: delta < 1");
  if (values.empty()) throw std::invalid_argument("signal_piecewise_constant: no values");
  for (const auto& v : values) box.require(v, "signal_piecewise_constant");
  const std::size_t needed = horizon / delta + 1;
  if (values.size() < needed) {
    throw std::invalid_argument("signal_piecewise_constant: need " +
                                std::to_string(needed) + " values for horizon " +
                                std::to_string(horizon));
  }
  std::vector<Vector> samples;
  samples.reserve(horizon + 1);
  for (std::size_t t = 0; t <= horizon; ++t) samples.push_back(values[t / delta]);
  return SchedulingSignal(box, std::move(samples));
}

inline SchedulingSignal signal_sinusoid(const SchedulingBox& box, const Vector& center,
                                        const Vector& amplitude, double time_scale,
                                        std::size_t horizon) {
  if (center.size() != box.dim() || amplitude.size() != box.dim()) {
    throw DimensionError("signal_sinusoid: center/amplitude dimension mismatch");
  }
  if (!(time_scale > 0.0)) throw std::invalid_argument("signal_sinusoid: time_scale <= 0");
  const Vector a = amplitude.cwiseAbs();
  box.require(center - a, "signal_sinusoid");
  box.require(center + a, "signal_sinusoid");
  std::vector<Vector> samples;
  samples.reserve(horizon + 1);
  for (std::size_t t = 0; t <= horizon; ++t) {
    samples.push_back(center + amplitude * std::sin(static_cast<double>(t) / time_scale));
  }
  return SchedulingSignal(box, std::move(samples));
}

// Membership in S_delta: p(k*delta + i) == p(k*delta) for i < delta.
inline bool in_s_delta(const SchedulingSignal& p, std::size_t delta) {
  if (delta < 1) return false;
  for (std::size_t t = 0; t < p.size(); ++t) {
    if (p[t] != p[(t / delta) * delta]) return false;
  }
  return true;
}

struct SignalClass {
  double max_step = 0.0;
  std::size_t dwell = 1;
};

// dwell is the largest delta in [1, T] with p in S_delta.
inline SignalClass classify_signal(const SchedulingSignal& p) {
  SignalClass c;
  for (std::size_t t = 0; t + 1 < p.size(); ++t) {
    c.max_step = std::max(c.max_step, (p[t + 1] - p[t]).norm());
  }
  for (std::size_t d = std::max<std::size_t>(p.horizon(), 1); d >= 1; --d) {
    if (in_s_delta(p, d)) {
      c.dwell = d;
      break;
    }
  }
  return c;
}

}  // namespace lpv
