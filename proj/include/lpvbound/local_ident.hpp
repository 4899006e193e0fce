#pragma once

// Local LPV identification from exact frozen data:
//   1. Markov parameters at every node of a scheduling grid,
//   2. Ho-Kalman realization of each node, moved to one canonical form,
//   3. multilinear interpolation of the node matrices.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <vector>

#include <Eigen/SVD>

#include "lpvbound/core.hpp"
#include "lpvbound/frozen_analysis.hpp"
#include "lpvbound/linalg.hpp"

namespace lpv {

struct FrozenDataset {
  std::vector<std::vector<double>> axes;  // per-axis node coordinates
  std::vector<Vector> nodes;              // tensor grid, last axis fastest
  std::vector<std::vector<Matrix>> markov;  // per node: C A^k B, k < length
  std::size_t length = 0;
};

inline FrozenDataset generate_frozen_data(const LpvModel& s,
                                          const std::vector<std::vector<double>>& axes,
                                          std::size_t length) {
  if (static_cast<int>(axes.size()) != s.n_p()) {
    throw DimensionError("generate_frozen_data: one node axis per scheduling dimension");
  }
  if (length < 2 * static_cast<std::size_t>(s.n_x()) + 2) {
    throw std::invalid_argument("generate_frozen_data: length must be >= 2 n_x + 2");
  }
  for (const auto& ax : axes) {
    if (ax.empty()) throw std::invalid_argument("generate_frozen_data: empty node axis");
    for (std::size_t k = 1; k < ax.size(); ++k) {
      if (!(ax[k] > ax[k - 1])) {
        throw std::invalid_argument("generate_frozen_data: nodes must be strictly increasing");
      }
    }
  }
  FrozenDataset d;
  d.axes = axes;
  d.length = length;
  d.nodes = SchedulingBox::tensor_grid(axes);
  for (const Vector& p : d.nodes) {
    s.box().require(p, "generate_frozen_data");
    d.markov.push_back(markov_parameters(s.freeze(p), length));
  }
  return d;
}

struct HoKalmanResult {
  LtiModel model;
  Vector hankel_singular_values;
};

// Ho-Kalman: balanced rank-n factorization H = O R of the block Hankel
// matrix H(i, j) = m[i + j]; C, B are the first block row/column of O, R and
// A solves O_up A = O_down.
inline HoKalmanResult ho_kalman_realize(const std::vector<Matrix>& markov, std::size_t order,
                                        double tol = 1e-8) {
  if (order < 1) throw std::invalid_argument("ho_kalman_realize: order must be >= 1");
  const std::size_t len = markov.size();
  if (len < 2 * order + 1) {
    throw std::invalid_argument("ho_kalman_realize: need at least 2 n + 1 Markov parameters");
  }
  const Eigen::Index ny = markov.front().rows();
  const Eigen::Index nu = markov.front().cols();
  for (const Matrix& m : markov) {
    if (m.rows() != ny || m.cols() != nu) {
      throw DimensionError("ho_kalman_realize: Markov parameter shapes differ");
    }
  }
  const std::size_t block_rows = (len + 1) / 2;
  const std::size_t block_cols = len + 1 - block_rows;
  const auto r = static_cast<Eigen::Index>(block_rows);
  const auto c = static_cast<Eigen::Index>(block_cols);
  Matrix hankel(r * ny, c * nu);
  for (Eigen::Index i = 0; i < r; ++i) {
    for (Eigen::Index j = 0; j < c; ++j) {
      hankel.block(i * ny, j * nu, ny, nu) = markov[static_cast<std::size_t>(i + j)];
    }
  }
  const Eigen::JacobiSVD<Matrix> svd(hankel, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& sv = svd.singularValues();
  const auto n = static_cast<Eigen::Index>(order);
  if (sv.size() < n || sv(0) == 0.0 || sv(n - 1) < tol * sv(0)) {
    throw ModelOrderError("ho_kalman_realize: Hankel rank is below the requested order");
  }
  if (sv.size() > n && sv(n) >= tol * sv(0)) {
    throw ModelOrderError("ho_kalman_realize: Hankel rank exceeds the requested order");
  }
  const Vector root = sv.head(n).cwiseSqrt();
  const Matrix obs = svd.matrixU().leftCols(n) * root.asDiagonal();
  const Matrix ctr = root.asDiagonal() * svd.matrixV().leftCols(n).transpose();

  HoKalmanResult out;
  out.hankel_singular_values = sv;
  out.model.C = obs.topRows(ny);
  out.model.B = ctr.leftCols(nu);
  out.model.A = obs.topRows((r - 1) * ny)
                    .colPivHouseholderQr()
                    .solve(obs.bottomRows((r - 1) * ny));
  return out;
}

// Rows of the observability matrix kept by the canonical form: scanned in
// order (C, CA, ...), a row is kept when it is independent of those kept so
// far. Row dependencies are invariant under state similarity.
inline std::vector<Eigen::Index> canonical_row_selection(const LtiModel& l,
                                                         double tol = 1e-9) {
  const Matrix obs = observability_matrix(l);
  const double scale = obs.norm();
  std::vector<Eigen::Index> rows;
  Matrix basis(l.n_x(), 0);
  for (Eigen::Index k = 0; k < obs.rows() && static_cast<Eigen::Index>(rows.size()) < l.n_x();
       ++k) {
    Vector v = obs.row(k).transpose();
    for (int pass = 0; pass < 2; ++pass) v -= basis * (basis.transpose() * v);
    if (scale > 0.0 && v.norm() > tol * scale) {
      rows.push_back(k);
      basis.conservativeResize(Eigen::NoChange, basis.cols() + 1);
      basis.col(basis.cols() - 1) = v.normalized();
    }
  }
  if (static_cast<Eigen::Index>(rows.size()) < l.n_x()) {
    throw NonMinimalError("to_canonical_form: model is not observable");
  }
  return rows;
}

// Observability canonical form: state coordinates are the selected rows of
// the observability matrix applied to x. For SISO models this is the
// companion form with C = [1 0 ... 0] and B = [CB; CAB; ...].
inline LtiModel to_canonical_form(const LtiModel& l, const std::vector<Eigen::Index>& rows) {
  l.validate();
  if (static_cast<Eigen::Index>(rows.size()) != l.n_x()) {
    throw DimensionError("to_canonical_form: row selection must have n_x entries");
  }
  const Matrix obs = observability_matrix(l);
  Matrix sel(l.n_x(), l.n_x());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    sel.row(static_cast<Eigen::Index>(k)) = obs.row(rows[k]);
  }
  if (rank_margin(reachability_matrix(l), l.n_x()) < 1e-10 ||
      rank_margin(sel, l.n_x()) < 1e-12) {
    throw NonMinimalError("to_canonical_form: model is not minimal");
  }
  const Eigen::ColPivHouseholderQR<Matrix> qr_t(sel.transpose());
  LtiModel out;
  out.A = qr_t.solve((sel * l.A).transpose()).transpose();
  out.B = sel * l.B;
  out.C = qr_t.solve(l.C.transpose()).transpose();
  return out;
}

inline LtiModel to_canonical_form(const LtiModel& l) {
  return to_canonical_form(l, canonical_row_selection(l));
}

// Node matrices -> grid-interpolated LPV model on `box` (which must lie in
// the node hull). A single node gives a constant model.
inline LpvModel interpolate_models(const std::vector<std::vector<double>>& axes,
                                   const std::vector<LtiModel>& models,
                                   const SchedulingBox& box) {
  if (models.empty()) throw std::invalid_argument("interpolate_models: no models");
  if (static_cast<int>(axes.size()) != box.dim()) {
    throw DimensionError("interpolate_models: axes do not match the box dimension");
  }
  for (const LtiModel& m : models) {
    m.validate();
    if (m.n_x() != models.front().n_x() || m.n_u() != models.front().n_u() ||
        m.n_y() != models.front().n_y()) {
      throw DimensionError("interpolate_models: node models have different dimensions");
    }
  }
  if (models.size() == 1) return LpvModel::constant(models.front(), box);
  std::vector<Matrix> a, b, c;
  for (const LtiModel& m : models) {
    a.push_back(m.A);
    b.push_back(m.B);
    c.push_back(m.C);
  }
  return LpvModel(MatrixFamily::grid(axes, std::move(a)), MatrixFamily::grid(axes, std::move(b)),
                  MatrixFamily::grid(axes, std::move(c)), box);
}

inline LpvModel interpolate_models(const std::vector<std::vector<double>>& axes,
                                   const std::vector<LtiModel>& models,
                                   int grid_points = 31) {
  Vector lo(static_cast<Eigen::Index>(axes.size()));
  Vector hi(static_cast<Eigen::Index>(axes.size()));
  for (std::size_t a = 0; a < axes.size(); ++a) {
    lo(static_cast<Eigen::Index>(a)) = axes[a].front();
    hi(static_cast<Eigen::Index>(a)) = axes[a].back();
  }
  return interpolate_models(axes, models, SchedulingBox(lo, hi, grid_points));
}

struct PipelineProvenance {
  std::vector<std::vector<double>> axes;
  std::vector<Vector> nodes;
  std::vector<Vector> hankel_singular_values;
  std::vector<double> canonical_residuals;  // Markov mismatch vs data, per node
  std::vector<Eigen::Index> canonical_rows;
  double node_equivalence_residual = 0.0;
  double inter_node_residual = 0.0;  // worst Markov mismatch at cell midpoints
  std::size_t order = 0;
  std::size_t length = 0;
  double node_spacing = 0.0;
};

struct PipelineResult {
  LpvModel model;
  PipelineProvenance provenance;
};

// Nodes p_min, p_min + spacing, ..., closed by p_max on every axis.
inline std::vector<std::vector<double>> spaced_axes(const SchedulingBox& box, double spacing) {
  if (!(spacing > 0.0)) throw std::invalid_argument("node spacing must be > 0");
  std::vector<std::vector<double>> axes;
  for (int a = 0; a < box.dim(); ++a) {
    const double lo = box.p_min()(a);
    const double hi = box.p_max()(a);
    std::vector<double> ax;
    const auto steps = static_cast<std::size_t>(std::floor((hi - lo) / spacing + 1e-9));
    for (std::size_t k = 0; k <= steps; ++k) ax.push_back(lo + spacing * static_cast<double>(k));
    if (hi - ax.back() > 1e-9 * std::max(1.0, std::abs(hi))) {
      ax.push_back(hi);
    } else {
      ax.back() = hi;
    }
    axes.push_back(std::move(ax));
  }
  return axes;
}

inline PipelineResult run_local_pipeline(const LpvModel& s, double node_spacing,
                                         std::size_t order = 0, std::size_t length = 0) {
  if (order == 0) order = static_cast<std::size_t>(s.n_x());
  if (length == 0) length = 2 * static_cast<std::size_t>(s.n_x()) + 2;
  PipelineResult out;
  PipelineProvenance& prov = out.provenance;
  prov.order = order;
  prov.length = length;
  prov.node_spacing = node_spacing;
  prov.axes = spaced_axes(s.box(), node_spacing);

  const FrozenDataset data = generate_frozen_data(s, prov.axes, length);
  prov.nodes = data.nodes;
  std::vector<LtiModel> canonical;
  for (std::size_t k = 0; k < data.nodes.size(); ++k) {
    HoKalmanResult hk = ho_kalman_realize(data.markov[k], order);
    if (k == 0) prov.canonical_rows = canonical_row_selection(hk.model);
    canonical.push_back(to_canonical_form(hk.model, prov.canonical_rows));
    prov.hankel_singular_values.push_back(hk.hankel_singular_values);
    const auto realized = markov_parameters(canonical.back(), length);
    double res = 0.0;
    for (std::size_t j = 0; j < length; ++j) {
      res = std::max(res, max_abs(realized[j] - data.markov[k][j]));
    }
    prov.canonical_residuals.push_back(res);
  }
  out.model = interpolate_models(prov.axes, canonical, s.box());

  prov.node_equivalence_residual =
      are_frozen_equivalent_at(s, out.model, data.nodes, 0.0).worst_residual;
  std::vector<std::vector<double>> mid_axes;
  for (const auto& ax : prov.axes) {
    std::vector<double> mids;
    for (std::size_t k = 0; k + 1 < ax.size(); ++k) mids.push_back(0.5 * (ax[k] + ax[k + 1]));
    if (mids.empty()) mids.push_back(ax.front());
    mid_axes.push_back(std::move(mids));
  }
  prov.inter_node_residual =
      are_frozen_equivalent_at(s, out.model, SchedulingBox::tensor_grid(mid_axes), 0.0)
          .worst_residual;
  return out;
}

}  // namespace lpv
