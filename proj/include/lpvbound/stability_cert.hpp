#pragma once

// Quadratic stability certificates and contraction normalization.
//
// A certificate is a positive definite P with A(p)^T P A(p) - P < 0 at every
// grid point. With P = S^T S, the model (S A S^-1, S B, C S^-1) is a
// contraction in the Euclidean norm and has the same input-output map.

#include <algorithm>
#include <cmath>
#include <utility>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/SVD>

#include "lpvbound/core.hpp"
#include "lpvbound/linalg.hpp"

namespace lpv {

struct QuadStabCertificate {
  Matrix P;
  Matrix S;  // upper triangular, P = S^T S
  double margin = 0.0;
  int grid_resolution = 0;
};

inline double sup_norm_over(const MatrixFamily& f, const std::vector<Vector>& points) {
  double best = 0.0;
  for (const Vector& p : points) best = std::max(best, spectral_norm(f.evaluate(p)));
  return best;
}

struct SupremumEstimate {
  double value = 0.0;          // on the box grid
  double refined_value = 0.0;  // on the grid with doubled resolution
  bool refinement_warning = false;  // refined value grew by more than 1%
};

inline SupremumEstimate grid_supremum(const MatrixFamily& f, const SchedulingBox& box) {
  SupremumEstimate est;
  est.value = sup_norm_over(f, box.grid());
  est.refined_value =
      sup_norm_over(f, box.with_grid(2 * box.grid_points_per_axis() - 1).grid());
  est.refinement_warning = est.refined_value > 1.01 * est.value;
  return est;
}

inline QuadStabCertificate verify_quadratic_stability(const LpvModel& sigma, const Matrix& P) {
  const Eigen::Index n = sigma.n_x();
  if (P.rows() != n || P.cols() != n) {
    throw DimensionError("verify_quadratic_stability: P must be " + std::to_string(n) + "x" +
                         std::to_string(n));
  }
  if (max_abs(P - P.transpose()) > 1e-12 * std::max(1.0, max_abs(P))) {
    throw std::invalid_argument("verify_quadratic_stability: P is not symmetric");
  }
  const Matrix p_sym = 0.5 * (P + P.transpose());
  const Eigen::LLT<Matrix> llt(p_sym);
  if (llt.info() != Eigen::Success ||
      Eigen::SelfAdjointEigenSolver<Matrix>(p_sym, Eigen::EigenvaluesOnly)
              .eigenvalues()
              .minCoeff() <= 0.0) {
    throw StabilityError("verify_quadratic_stability: P is not positive definite");
  }
  QuadStabCertificate cert;
  cert.P = p_sym;
  cert.S = llt.matrixU();
  cert.grid_resolution = sigma.box().grid_points_per_axis();
  cert.margin = std::numeric_limits<double>::infinity();
  for (const Vector& p : sigma.box().grid()) {
    const Matrix a = sigma.A().evaluate(p);
    const Matrix gap = p_sym - a.transpose() * p_sym * a;
    const double lam = Eigen::SelfAdjointEigenSolver<Matrix>(0.5 * (gap + gap.transpose()),
                                                             Eigen::EigenvaluesOnly)
                           .eigenvalues()
                           .minCoeff();
    cert.margin = std::min(cert.margin, lam);
  }
  if (!(cert.margin > 0.0)) {
    throw StabilityError("verify_quadratic_stability: Lyapunov inequality fails (margin " +
                         std::to_string(cert.margin) + ")");
  }
  return cert;
}

// Solves A^T P A - P = -Q by vectorization; intended for small n.
inline Matrix solve_discrete_lyapunov(const Matrix& A, const Matrix& Q) {
  const Eigen::Index n = A.rows();
  const Matrix at = A.transpose();
  Matrix kron(n * n, n * n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) kron.block(i * n, j * n, n, n) = at(i, j) * at;
  }
  const Matrix lhs = Matrix::Identity(n * n, n * n) - kron;
  const Vector rhs = Eigen::Map<const Vector>(Q.data(), n * n);
  const Vector vec_p = lhs.fullPivLu().solve(rhs);
  const Matrix p = Eigen::Map<const Matrix>(vec_p.data(), n, n);
  return 0.5 * (p + p.transpose());
}

namespace detail {

inline std::optional<Matrix> accept_candidate(const LpvModel& sigma, Matrix P) {
  if (!P.allFinite()) return std::nullopt;
  const double top = Eigen::SelfAdjointEigenSolver<Matrix>(P, Eigen::EigenvaluesOnly)
                         .eigenvalues()
                         .maxCoeff();
  if (!(top > 0.0)) return std::nullopt;
  P /= top;
  try {
    verify_quadratic_stability(sigma, P);
    return P;
  } catch (const StabilityError&) {
    return std::nullopt;
  }
}

}  // namespace detail

// Smoothed minimization of max_p ||S A(p) S^-1|| over S, started from
// `start`. Gradient of sigma_max(S A S^-1) with top singular pair (u, v):
//   u (A S^-1 v)^T - sigma v (S^-1 v)^T.
inline Matrix descend_contraction(const std::vector<Matrix>& as, Matrix s, int max_iter = 400) {
  constexpr double kBeta = 60.0;
  auto objective = [&](const Matrix& sm, Matrix* grad) {
    const Eigen::PartialPivLU<Matrix> lu(sm);
    const Matrix s_inv = lu.inverse();
    std::vector<double> sig(as.size());
    std::vector<Matrix> g(as.size());
    double top = 0.0;
    for (std::size_t k = 0; k < as.size(); ++k) {
      const Matrix m = sm * as[k] * s_inv;
      const Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
      sig[k] = svd.singularValues()(0);
      top = std::max(top, sig[k]);
      if (grad != nullptr) {
        const Vector u = svd.matrixU().col(0);
        const Vector v = svd.matrixV().col(0);
        const Vector z = s_inv * v;
        g[k] = u * (as[k] * z).transpose() - sig[k] * v * z.transpose();
      }
    }
    double sum = 0.0;
    for (double x : sig) sum += std::exp(kBeta * (x - top));
    if (grad != nullptr) {
      grad->setZero(sm.rows(), sm.cols());
      for (std::size_t k = 0; k < as.size(); ++k) {
        *grad += std::exp(kBeta * (sig[k] - top)) / sum * g[k];
      }
    }
    return std::make_pair(top + std::log(sum) / kBeta, top);
  };
  s /= s.norm();
  Matrix grad;
  auto [f, top] = objective(s, &grad);
  double step = 0.1;
  for (int it = 0; it < max_iter && top >= 1.0 - 1e-6; ++it) {
    bool moved = false;
    for (int ls = 0; ls < 30; ++ls, step *= 0.5) {
      Matrix trial = s - step * grad;
      trial /= trial.norm();
      if (!trial.allFinite() || condition_number(trial) > 1e8) continue;
      const auto [ft, tt] = objective(trial, nullptr);
      if (ft < f) {
        s = trial;
        f = ft;
        top = tt;
        moved = true;
        step *= 2.0;
        break;
      }
    }
    if (!moved) break;
    objective(s, &grad);
  }
  return s;
}

// Heuristic search: P = I when every grid A(p) is a Euclidean contraction,
// else the Lyapunov solution at the box midpoint, else the average of the
// Lyapunov solutions at the grid points, else a descent on
// max_p ||S A(p) S^-1|| from the best of these. Each candidate is
// grid-verified.
inline std::optional<Matrix> find_common_lyapunov(const LpvModel& sigma) {
  const Eigen::Index n = sigma.n_x();
  const auto grid = sigma.box().grid();
  if (sup_norm_over(sigma.A(), grid) < 1.0) return Matrix(Matrix::Identity(n, n));

  const Matrix eye = Matrix::Identity(n, n);
  const Vector mid = 0.5 * (sigma.box().p_min() + sigma.box().p_max());
  const Matrix p_mid = solve_discrete_lyapunov(sigma.A().evaluate(mid), eye);
  if (auto p = detail::accept_candidate(sigma, p_mid)) return p;

  std::vector<Matrix> as;
  Matrix sum = Matrix::Zero(n, n);
  bool finite = true;
  for (const Vector& q : grid) {
    as.push_back(sigma.A().evaluate(q));
    const Matrix pq = solve_discrete_lyapunov(as.back(), eye);
    finite = finite && pq.allFinite();
    sum += pq / static_cast<double>(grid.size());
  }
  if (finite) {
    if (auto p = detail::accept_candidate(sigma, sum)) return p;
  }

  // Descent from the candidate with the smallest worst-case contraction.
  Matrix best = eye;
  double best_top = sup_norm_over(sigma.A(), grid);
  for (const Matrix& cand : {p_mid, sum}) {
    const Eigen::LLT<Matrix> llt(0.5 * (cand + cand.transpose()));
    if (!cand.allFinite() || llt.info() != Eigen::Success) continue;
    const Matrix sc = llt.matrixU();
    double top = 0.0;
    for (const Matrix& a : as) top = std::max(top, spectral_norm(sc * a * sc.inverse()));
    if (top < best_top) {
      best_top = top;
      best = sc;
    }
  }
  const Matrix s = descend_contraction(as, best);
  return detail::accept_candidate(sigma, s.transpose() * s);
}

// Applies f -> L f R to every coefficient / node value.
inline MatrixFamily transform_family(const MatrixFamily& f, const Matrix& left,
                                     const Matrix& right) {
  if (f.is_affine()) {
    std::vector<Matrix> coeffs;
    for (const Matrix& m : f.as_affine().coefficients) coeffs.push_back(left * m * right);
    return MatrixFamily::affine(std::move(coeffs));
  }
  std::vector<Matrix> values;
  for (const Matrix& m : f.as_grid().values) values.push_back(left * m * right);
  return MatrixFamily::grid(f.as_grid().nodes, std::move(values));
}

// (S A S^-1, S B, C S^-1) for a constant nonsingular S.
inline LpvModel similarity_transform(const LpvModel& sigma, const Matrix& S) {
  const Matrix s_inv = S.inverse();
  const Eigen::Index nu = sigma.n_u();
  const Eigen::Index ny = sigma.n_y();
  return LpvModel(transform_family(sigma.A(), S, s_inv),
                  transform_family(sigma.B(), S, Matrix::Identity(nu, nu)),
                  transform_family(sigma.C(), Matrix::Identity(ny, ny), s_inv), sigma.box());
}

struct NormalizedModel {
  LpvModel sigma_bar;
  Matrix S;
  double alpha = 0.0;
};

inline NormalizedModel normalize_contractive(const LpvModel& sigma,
                                             const QuadStabCertificate& cert) {
  NormalizedModel out;
  out.S = cert.S;
  out.sigma_bar = similarity_transform(sigma, cert.S);
  out.alpha = sup_norm_over(out.sigma_bar.A(), sigma.box().grid());
  if (!(out.alpha < 1.0)) {
    throw StabilityError("normalize_contractive: normalized model is not a contraction");
  }
  return out;
}

// mu1 = K_B̂ / (1 - alpha_hat): for x̂(0) = 0 and ||Â(p)|| <= alpha_hat,
// ||x̂(t+1)|| <= alpha_hat ||x̂(t)|| + K_B̂ ||u||_inf.
inline double state_gain_mu1(const LpvModel& sigma_hat, double alpha_hat,
                             const std::vector<Vector>& points) {
  if (!(alpha_hat >= 0.0 && alpha_hat < 1.0)) {
    throw StabilityError("state_gain_mu1: alpha_hat must lie in [0, 1)");
  }
  if (sup_norm_over(sigma_hat.A(), points) > alpha_hat * (1.0 + 1e-12) + 1e-15) {
    throw std::invalid_argument("state_gain_mu1: sup ||Â(p)|| exceeds alpha_hat");
  }
  return sup_norm_over(sigma_hat.B(), points) / (1.0 - alpha_hat);
}

inline double state_gain_mu1(const LpvModel& sigma_hat, double alpha_hat) {
  return state_gain_mu1(sigma_hat, alpha_hat, sigma_hat.box().grid());
}

struct ContractionData {
  double alpha = 0.0;
  double alpha_hat = 0.0;
  double mu1 = 0.0;
  Matrix S;      // identity when the model already contracts
  Matrix S_hat;
  int grid_resolution = 0;
  bool refinement_warning = false;
};

struct ContractedPair {
  LpvModel sigma_bar;
  LpvModel sigma_hat_bar;
  QuadStabCertificate cert;
  QuadStabCertificate cert_hat;
  ContractionData data;
};

// Certifies both models (searching for P when none is given), normalizes
// them and evaluates alpha, alpha_hat and mu1 on the box grid.
inline ContractedPair contract_pair(const LpvModel& s, const LpvModel& s_hat,
                                    std::optional<Matrix> P = std::nullopt,
                                    std::optional<Matrix> P_hat = std::nullopt) {
  if (!P) P = find_common_lyapunov(s);
  if (!P) throw StabilityError("no common quadratic Lyapunov function found for the model");
  if (!P_hat) P_hat = find_common_lyapunov(s_hat);
  if (!P_hat) {
    throw StabilityError("no common quadratic Lyapunov function found for the hatted model");
  }
  ContractedPair out;
  out.cert = verify_quadratic_stability(s, *P);
  out.cert_hat = verify_quadratic_stability(s_hat, *P_hat);
  NormalizedModel n = normalize_contractive(s, out.cert);
  NormalizedModel nh = normalize_contractive(s_hat, out.cert_hat);
  out.sigma_bar = n.sigma_bar;
  out.sigma_hat_bar = nh.sigma_bar;
  out.data.S = n.S;
  out.data.S_hat = nh.S;
  out.data.alpha = n.alpha;
  out.data.alpha_hat = nh.alpha;
  out.data.mu1 = state_gain_mu1(nh.sigma_bar, nh.alpha);
  out.data.grid_resolution = s.box().grid_points_per_axis();
  out.data.refinement_warning =
      grid_supremum(n.sigma_bar.A(), s.box()).refinement_warning ||
      grid_supremum(nh.sigma_bar.A(), s.box()).refinement_warning;
  return out;
}

}  // namespace lpv
