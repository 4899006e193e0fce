#pragma once

// Frozen minimality and frozen equivalence of LPV models, and the pointwise
// state isomorphism T(p) between two frozen-equivalent minimal models.
//
// Convention: T = T(p) maps the hatted model onto the reference one,
//   A(p) = T Â(p) T^-1,   B(p) = T B̂(p),   Ĉ(p) = C(p) T,
// so that x = T x̂ along constant scheduling.

#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "lpvbound/core.hpp"
#include "lpvbound/linalg.hpp"

namespace lpv {

struct IsoTolerances {
  double rank_tol = 1e-8;      // relative to the largest singular value
  double residual_tol = 1e-6;  // scaled 2-norm residual of the similarity
};

// [B, AB, ..., A^{n-1} B]
inline Matrix reachability_matrix(const LtiModel& l) {
  l.validate();
  const Eigen::Index n = l.n_x();
  const Eigen::Index m = l.n_u();
  Matrix r(n, n * m);
  if (n == 0) return r;
  r.leftCols(m) = l.B;
  for (Eigen::Index k = 1; k < n; ++k) {
    r.middleCols(k * m, m) = l.A * r.middleCols((k - 1) * m, m);
  }
  return r;
}

// [C; CA; ...; C A^{n-1}]
inline Matrix observability_matrix(const LtiModel& l) {
  l.validate();
  const Eigen::Index n = l.n_x();
  const Eigen::Index q = l.n_y();
  Matrix o(n * q, n);
  if (n == 0) return o;
  o.topRows(q) = l.C;
  for (Eigen::Index k = 1; k < n; ++k) {
    o.middleRows(k * q, q) = o.middleRows((k - 1) * q, q) * l.A;
  }
  return o;
}

// Smallest singular value relative to the largest; 0 for a zero matrix or
// when there are fewer than `rank` singular values.
inline double rank_margin(const Matrix& m, Eigen::Index rank) {
  const Vector s = singular_values(m);
  if (s.size() < rank || rank == 0) return rank == 0 ? 1.0 : 0.0;
  if (s(0) == 0.0) return 0.0;
  return s(rank - 1) / s(0);
}

inline std::vector<Matrix> markov_parameters(const LtiModel& l, std::size_t count) {
  l.validate();
  std::vector<Matrix> out;
  out.reserve(count);
  Matrix ak_b = l.B;
  for (std::size_t k = 0; k < count; ++k) {
    out.push_back(l.C * ak_b);
    ak_b = l.A * ak_b;
  }
  return out;
}

struct MinimalityReport {
  bool minimal = false;
  Vector worst_p;
  // min over the grid of sigma_min/sigma_max over reachability and
  // observability matrices.
  double worst_sigma_min = 0.0;
  double rank_tol = 0.0;
  int grid_resolution = 0;
};

inline MinimalityReport is_frozen_minimal(const LpvModel& sigma, double rank_tol = 1e-8) {
  if (!(rank_tol > 0.0)) throw std::invalid_argument("is_frozen_minimal: rank_tol <= 0");
  MinimalityReport rep;
  rep.rank_tol = rank_tol;
  rep.grid_resolution = sigma.box().grid_points_per_axis();
  rep.worst_sigma_min = std::numeric_limits<double>::infinity();
  for (const Vector& p : sigma.box().grid()) {
    const LtiModel l = sigma.freeze(p);
    const double margin = std::min(rank_margin(reachability_matrix(l), l.n_x()),
                                   rank_margin(observability_matrix(l), l.n_x()));
    if (margin < rep.worst_sigma_min) {
      rep.worst_sigma_min = margin;
      rep.worst_p = p;
    }
  }
  rep.minimal = rep.worst_sigma_min > 0.0 && rep.worst_sigma_min >= rank_tol;
  return rep;
}

struct EquivalenceReport {
  bool equivalent = false;
  Vector worst_p;
  double worst_residual = 0.0;
  double tol = 0.0;
  int grid_resolution = 0;
};

inline void require_same_dims(const LpvModel& a, const LpvModel& b, const char* who) {
  if (a.n_x() != b.n_x() || a.n_u() != b.n_u() || a.n_y() != b.n_y() ||
      a.n_p() != b.n_p()) {
    throw DimensionError(std::string(who) + ": models have different dimensions");
  }
}

// Max elementwise difference of the first 2*n_x Markov parameters at `p`.
inline double markov_residual(const LtiModel& a, const LtiModel& b) {
  const std::size_t count = 2 * static_cast<std::size_t>(a.n_x());
  const auto ma = markov_parameters(a, count);
  const auto mb = markov_parameters(b, count);
  double worst = 0.0;
  for (std::size_t k = 0; k < count; ++k) worst = std::max(worst, max_abs(ma[k] - mb[k]));
  return worst;
}

inline EquivalenceReport are_frozen_equivalent_at(const LpvModel& s1, const LpvModel& s2,
                                                  const std::vector<Vector>& points,
                                                  double tol) {
  require_same_dims(s1, s2, "are_frozen_equivalent");
  EquivalenceReport rep;
  rep.tol = tol;
  rep.grid_resolution = s1.box().grid_points_per_axis();
  rep.worst_residual = -1.0;
  for (const Vector& p : points) {
    const double r = markov_residual(s1.freeze(p), s2.freeze(p));
    if (r > rep.worst_residual) {
      rep.worst_residual = r;
      rep.worst_p = p;
    }
  }
  rep.worst_residual = std::max(rep.worst_residual, 0.0);
  rep.equivalent = rep.worst_residual <= tol;
  return rep;
}

inline EquivalenceReport are_frozen_equivalent(const LpvModel& s1, const LpvModel& s2,
                                               double tol = 1e-8) {
  return are_frozen_equivalent_at(s1, s2, s1.box().grid(), tol);
}

struct FrozenIsomorphism {
  Vector p;
  Matrix T;
  double condition_number = 1.0;
  double residual = 0.0;  // worst scaled residual of the three relations
};

// T = R(L) R(L̂)^T [R(L̂) R(L̂)^T]^-1, evaluated as the least-squares solution
// of T R(L̂) = R(L).
inline FrozenIsomorphism frozen_isomorphism(const LtiModel& l_hat, const LtiModel& l,
                                            const IsoTolerances& tol = {}) {
  l.validate();
  l_hat.validate();
  if (l.n_x() != l_hat.n_x() || l.n_u() != l_hat.n_u() || l.n_y() != l_hat.n_y()) {
    throw DimensionError("frozen_isomorphism: frozen models have different dimensions");
  }
  const Matrix r = reachability_matrix(l);
  const Matrix r_hat = reachability_matrix(l_hat);
  if (rank_margin(r_hat, l.n_x()) < tol.rank_tol) {
    throw NonMinimalError("frozen_isomorphism: reachability Gram matrix is singular");
  }
  FrozenIsomorphism iso;
  iso.T = Eigen::ColPivHouseholderQR<Matrix>(r_hat.transpose())
              .solve(r.transpose())
              .transpose();
  iso.condition_number = condition_number(iso.T);
  if (!std::isfinite(iso.condition_number) || iso.condition_number > 1e14) {
    throw NonMinimalError("frozen_isomorphism: isomorphism is numerically singular");
  }
  const Matrix t_inv = iso.T.inverse();
  iso.residual = std::max({scaled_residual(iso.T * l_hat.A * t_inv, l.A),
                           scaled_residual(iso.T * l_hat.B, l.B),
                           scaled_residual(l.C * iso.T, l_hat.C)});
  if (!(iso.residual <= tol.residual_tol)) {
    throw NonEquivalentError("frozen_isomorphism: similarity residual " +
                             std::to_string(iso.residual) + " exceeds tolerance");
  }
  return iso;
}

inline FrozenIsomorphism frozen_isomorphism(const LpvModel& s_hat, const LpvModel& s,
                                            const Vector& p, const IsoTolerances& tol = {}) {
  require_same_dims(s_hat, s, "frozen_isomorphism");
  FrozenIsomorphism iso = frozen_isomorphism(s_hat.freeze(p), s.freeze(p), tol);
  iso.p = p;
  return iso;
}

struct MismatchMatrix {
  Vector p1;
  Vector p2;
  Matrix M;
  double deviation = 0.0;  // ||I - M||_2
};

inline double mismatch_deviation(const Matrix& M) {
  return spectral_norm(Matrix::Identity(M.rows(), M.cols()) - M);
}

// M = T(p1) T(p2)^-1
inline MismatchMatrix mismatch(const LpvModel& s_hat, const LpvModel& s, const Vector& p1,
                               const Vector& p2, const IsoTolerances& tol = {}) {
  MismatchMatrix mm;
  mm.p1 = p1;
  mm.p2 = p2;
  const Matrix t1 = frozen_isomorphism(s_hat, s, p1, tol).T;
  const Matrix t2 = frozen_isomorphism(s_hat, s, p2, tol).T;
  mm.M = t2.transpose().colPivHouseholderQr().solve(t1.transpose()).transpose();
  mm.deviation = mismatch_deviation(mm.M);
  return mm;
}

// Whether T(p(.)) is an LPV isomorphism along the given signal:
//   A(p(t)) = T(p(t+1)) Â(p(t)) T(p(t))^-1,  B(p(t)) = T(p(t+1)) B̂(p(t)).
inline bool check_lpv_isomorphism(const LpvModel& s_hat, const LpvModel& s,
                                  const SchedulingSignal& p, double tol = 1e-6) {
  try {
    require_same_dims(s_hat, s, "check_lpv_isomorphism");
    std::vector<Matrix> t(p.size());
    for (std::size_t k = 0; k < p.size(); ++k) t[k] = frozen_isomorphism(s_hat, s, p[k]).T;
    for (std::size_t k = 0; k + 1 < p.size(); ++k) {
      const LtiModel l = s.freeze(p[k]);
      const LtiModel lh = s_hat.freeze(p[k]);
      const double ra = scaled_residual(t[k + 1] * lh.A * t[k].inverse(), l.A);
      const double rb = scaled_residual(t[k + 1] * lh.B, l.B);
      if (!(ra <= tol && rb <= tol)) return false;
    }
    return true;
  } catch (const std::exception&) {
    return false;
  }
}

// Â = T^-1 A T, B̂ = T^-1 B, Ĉ = C T at every box grid node, returned as a
// grid-interpolated model. Frozen-equivalent to `s` at the nodes.
inline LpvModel make_frozen_equivalent(const LpvModel& s, const MatrixFamily& t_family) {
  if (t_family.rows() != s.n_x() || t_family.cols() != s.n_x() ||
      t_family.n_p() != s.n_p()) {
    throw DimensionError("make_frozen_equivalent: T family has wrong shape");
  }
  const auto axes = s.box().all_axis_nodes();
  const auto nodes = SchedulingBox::tensor_grid(axes);
  std::vector<Matrix> a, b, c;
  a.reserve(nodes.size());
  b.reserve(nodes.size());
  c.reserve(nodes.size());
  for (const Vector& p : nodes) {
    const Matrix t = t_family.evaluate(p);
    if (condition_number(t) > 1e12) {
      throw std::invalid_argument("make_frozen_equivalent: T(p) is singular at a grid node");
    }
    const Eigen::PartialPivLU<Matrix> lu(t);
    const LtiModel l = s.freeze(p);
    a.push_back(lu.solve(l.A * t));
    b.push_back(lu.solve(l.B));
    c.push_back(l.C * t);
  }
  return LpvModel(MatrixFamily::grid(axes, std::move(a)), MatrixFamily::grid(axes, std::move(b)),
                  MatrixFamily::grid(axes, std::move(c)), s.box());
}

}  // namespace lpv
