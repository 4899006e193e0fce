#pragma once

// Global input-output difference bound for frozen-equivalent, frozen-minimal,
// quadratically stable LPV pairs driven by piecewise-constant scheduling with
// dwell delta:
//
//   ||y(t) - ŷ(t)|| <= g(delta, K, t mod delta) ||u||,
//   g(delta, K, i)   = alpha^i / (1 - alpha^delta) K (alpha K_T mu1 + K_B) K_C,
//
// with K = K_M(p) (signal mismatch) or K = K_M (worst mismatch over P x P).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <optional>
#include <vector>

#include "lpvbound/core.hpp"
#include "lpvbound/frozen_analysis.hpp"
#include "lpvbound/linalg.hpp"
#include "lpvbound/stability_cert.hpp"

namespace lpv {

struct BoundConstants {
  double K_B = 0.0;
  double K_C = 0.0;
  double K_T = 0.0;
  double K_M_signal = 0.0;
  double K_M_global = 0.0;
  double alpha = 0.0;
  double alpha_hat = 0.0;
  double mu1 = 0.0;
  int grid_resolution = 0;
  std::size_t evaluation_points = 0;  // grid points plus distinct signal values
};

namespace detail {

struct VectorLess {
  bool operator()(const Vector& a, const Vector& b) const {
    return std::lexicographical_compare(a.data(), a.data() + a.size(), b.data(),
                                        b.data() + b.size());
  }
};

// T(p) and T(p)^-1 at a fixed point set.
struct IsoTable {
  std::vector<Vector> points;
  std::vector<Matrix> T;
  std::vector<Matrix> T_inv;
  std::map<Vector, std::size_t, VectorLess> index;

  std::size_t add(const Vector& p) {
    auto [it, inserted] = index.emplace(p, points.size());
    if (inserted) points.push_back(p);
    return it->second;
  }

  void evaluate(const LpvModel& s_hat, const LpvModel& s, const IsoTolerances& tol) {
    T.clear();
    T_inv.clear();
    for (const Vector& p : points) {
      T.push_back(frozen_isomorphism(s_hat, s, p, tol).T);
      T_inv.push_back(T.back().inverse());
    }
  }

  // ||I - T(a) T(b)^-1||
  double deviation(std::size_t a, std::size_t b) const {
    return mismatch_deviation(T[a] * T_inv[b]);
  }
};

}  // namespace detail

// Evaluates every bound constant on the contraction-normalized pair
// (S A S^-1, S B, C S^-1) and (Ŝ Â Ŝ^-1, Ŝ B̂, Ĉ Ŝ^-1). Suprema run over the
// box grid plus every distinct value the signal visits, so the constants
// hold along that signal even off the grid.
inline BoundConstants compute_constants(const LpvModel& s, const LpvModel& s_hat,
                                        const SchedulingSignal* signal,
                                        const ContractionData& contraction,
                                        const IsoTolerances& tol = {}) {
  require_same_dims(s_hat, s, "compute_constants");
  const LpvModel s_bar = similarity_transform(s, contraction.S);
  const LpvModel sh_bar = similarity_transform(s_hat, contraction.S_hat);

  detail::IsoTable table;
  const auto grid = s.box().grid();
  for (const Vector& p : grid) table.add(p);
  const std::size_t n_grid = table.points.size();
  std::vector<std::size_t> signal_index;
  if (signal != nullptr) {
    for (const Vector& p : signal->samples()) {
      s.box().require(p, "compute_constants");
      signal_index.push_back(table.add(p));
    }
  }
  table.evaluate(sh_bar, s_bar, tol);

  BoundConstants c;
  c.grid_resolution = s.box().grid_points_per_axis();
  c.evaluation_points = table.points.size();
  c.alpha = contraction.alpha;
  c.alpha_hat = contraction.alpha_hat;
  double kb_hat = 0.0;
  for (std::size_t k = 0; k < table.points.size(); ++k) {
    const Vector& p = table.points[k];
    c.K_B = std::max(c.K_B, spectral_norm(s_bar.B().evaluate(p)));
    c.K_C = std::max(c.K_C, spectral_norm(s_bar.C().evaluate(p)));
    c.K_T = std::max(c.K_T, spectral_norm(table.T[k]));
    c.alpha = std::max(c.alpha, spectral_norm(s_bar.A().evaluate(p)));
    c.alpha_hat = std::max(c.alpha_hat, spectral_norm(sh_bar.A().evaluate(p)));
    kb_hat = std::max(kb_hat, spectral_norm(sh_bar.B().evaluate(p)));
  }
  if (!(c.alpha < 1.0) || !(c.alpha_hat < 1.0)) {
    throw StabilityError("compute_constants: normalized models do not contract at every "
                         "evaluation point");
  }
  c.mu1 = std::max(contraction.mu1, kb_hat / (1.0 - c.alpha_hat));

  for (std::size_t a = 0; a < n_grid; ++a) {
    for (std::size_t b = 0; b < n_grid; ++b) {
      if (a != b) c.K_M_global = std::max(c.K_M_global, table.deviation(a, b));
    }
  }
  // Both orientations of each consecutive pair are covered.
  for (std::size_t k = 0; k + 1 < signal_index.size(); ++k) {
    const std::size_t a = signal_index[k];
    const std::size_t b = signal_index[k + 1];
    if (a == b) continue;
    c.K_M_signal = std::max({c.K_M_signal, table.deviation(a, b), table.deviation(b, a)});
  }
  // The supremum over P x P dominates every pair the signal visits.
  c.K_M_global = std::max(c.K_M_global, c.K_M_signal);
  return c;
}

// g with an explicit alpha; shared by g_function and the stability threshold.
inline double g_with_alpha(std::size_t delta, double K, std::size_t i, const BoundConstants& c,
                           double alpha) {
  if (delta < 1) throw std::invalid_argument("g_function: delta must be >= 1");
  if (i >= delta) throw std::out_of_range("g_function: phase i must lie in [0, delta)");
  if (!(alpha >= 0.0 && alpha < 1.0)) {
    throw StabilityError("g_function: alpha must lie in [0, 1)");
  }
  const double di = static_cast<double>(i);
  const double dd = static_cast<double>(delta);
  return std::pow(alpha, di) / (1.0 - std::pow(alpha, dd)) * K *
         (alpha * c.K_T * c.mu1 + c.K_B) * c.K_C;
}

inline double g_function(std::size_t delta, double K, std::size_t i, const BoundConstants& c) {
  return g_with_alpha(delta, K, i, c, c.alpha);
}

inline std::vector<double> envelope(std::size_t horizon, std::size_t delta,
                                    const BoundConstants& c, double u_norm,
                                    bool use_signal_km) {
  if (delta < 1) throw std::invalid_argument("envelope: delta must be >= 1");
  const double K = use_signal_km ? c.K_M_signal : c.K_M_global;
  std::vector<double> per_phase(delta);
  for (std::size_t i = 0; i < delta; ++i) per_phase[i] = g_function(delta, K, i, c) * u_norm;
  std::vector<double> out(horizon + 1);
  for (std::size_t t = 0; t <= horizon; ++t) out[t] = per_phase[t % delta];
  return out;
}

struct BoundRow {
  std::size_t t = 0;
  std::size_t i = 0;
  double measured = 0.0;
  double envelope_signal = 0.0;
  double envelope_global = 0.0;
  bool violated = false;
};

struct BoundReport {
  std::size_t delta = 1;
  InputNorm input_norm = InputNorm::kLinf;
  double u_norm = 0.0;
  BoundConstants constants;
  std::vector<BoundRow> rows;
  std::vector<Vector> y;
  std::vector<Vector> y_hat;
  double max_measured = 0.0;
  double max_envelope = 0.0;   // of the signal-specific chain
  double tightness_ratio = 0.0;  // max_measured / max_envelope (0 if the envelope is 0)
  std::size_t violations = 0;
};

inline constexpr double kViolationTol = 1e-9;

// Simulates both models from zero state and compares ||y - ŷ|| against the
// two envelope chains.
inline BoundReport check_bound(const LpvModel& s, const LpvModel& s_hat, const InputSignal& u,
                               const SchedulingSignal& p, std::size_t delta,
                               const ContractionData& contraction,
                               InputNorm norm = InputNorm::kLinf,
                               const IsoTolerances& tol = {}) {
  if (!in_s_delta(p, delta)) {
    throw SignalClassError("check_bound: scheduling signal is not in S_delta for delta = " +
                           std::to_string(delta));
  }
  BoundReport rep;
  rep.delta = delta;
  rep.input_norm = norm;
  rep.u_norm = u.norm(norm);
  rep.constants = compute_constants(s, s_hat, &p, contraction, tol);
  rep.y = io_map(s, u, p);
  rep.y_hat = io_map(s_hat, u, p);
  const auto env_signal = envelope(p.horizon(), delta, rep.constants, rep.u_norm, true);
  const auto env_global = envelope(p.horizon(), delta, rep.constants, rep.u_norm, false);
  rep.rows.resize(p.size());
  for (std::size_t t = 0; t < p.size(); ++t) {
    BoundRow& r = rep.rows[t];
    r.t = t;
    r.i = t % delta;
    r.measured = (rep.y[t] - rep.y_hat[t]).norm();
    r.envelope_signal = env_signal[t];
    r.envelope_global = env_global[t];
    r.violated = r.measured > r.envelope_signal + kViolationTol;
    rep.violations += r.violated ? 1 : 0;
    rep.max_measured = std::max(rep.max_measured, r.measured);
    rep.max_envelope = std::max(rep.max_envelope, r.envelope_signal);
  }
  rep.tightness_ratio = rep.max_envelope > 0.0 ? rep.max_measured / rep.max_envelope : 0.0;
  return rep;
}

// ---------------------------------------------------------------------------
// Thresholds. Each result carries the bound at the returned value and at the
// adjacent infeasible value so callers can re-check it.

struct SwitchingThreshold {
  std::size_t delta_m = 1;
  double bound_at_threshold = 0.0;  // sup over delta > delta_m, i > delta_m of g
  std::optional<double> bound_below;  // same quantity at delta_m - 1 (>= epsilon)
};

// Worst g over delta > m and m < i < delta: attained at i = m + 1, delta = m + 2.
inline double switching_bound(std::size_t m, double K, const BoundConstants& c) {
  return g_function(m + 2, K, m + 1, c);
}

inline SwitchingThreshold delta_min_for_epsilon(const BoundConstants& c, double epsilon,
                                                bool use_global_km) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("delta_min_for_epsilon: epsilon <= 0");
  const double K = use_global_km ? c.K_M_global : c.K_M_signal;
  const double kc = K * (c.alpha * c.K_T * c.mu1 + c.K_B) * c.K_C;
  SwitchingThreshold out;
  std::size_t m = 1;
  if (kc > 0.0 && c.alpha > 0.0) {
    // alpha^{m+1} kc / (1 - alpha) < epsilon is sufficient.
    const double guess = std::log(epsilon * (1.0 - c.alpha) / kc) / std::log(c.alpha) - 1.0;
    m = guess > 1.0 ? static_cast<std::size_t>(std::ceil(guess)) : 1;
    while (!(switching_bound(m, K, c) < epsilon)) ++m;
    while (m > 1 && switching_bound(m - 1, K, c) < epsilon) --m;
  }
  out.delta_m = m;
  out.bound_at_threshold = switching_bound(m, K, c);
  if (m > 1) out.bound_below = switching_bound(m - 1, K, c);
  return out;
}

struct SpeedThreshold {
  double delta_step = 0.0;
  bool achieved = true;
  double bound_at_threshold = 0.0;
  std::optional<double> bound_above;  // at delta_step + bisection tolerance
  double mismatch_at_threshold = 0.0;  // sup ||I - M|| over pairs within delta_step
  double verified_mismatch = 0.0;      // same supremum recomputed pair by pair
  double smallest_bound = 0.0;         // bound at the finest grid step
  double bisection_tol = 1e-6;
};

namespace detail {

struct PairDeviation {
  double distance;
  double deviation;
};

// Step function delta -> sup{ ||I - M_{p1,p2}|| : ||p1 - p2|| <= delta } on the grid.
struct MismatchProfile {
  std::vector<double> distance;   // ascending
  std::vector<double> running;    // prefix maximum of deviation

  double at(double delta) const {
    auto it = std::upper_bound(distance.begin(), distance.end(), delta);
    if (it == distance.begin()) return 0.0;
    return running[static_cast<std::size_t>(it - distance.begin()) - 1];
  }
};

}  // namespace detail

// Step-size threshold for arbitrary (delta = 1) scheduling: bisects on the
// maximal step until the delta = 1 envelope g(1, K(step), 0) falls below
// epsilon, where K(step) is the grid supremum of ||I - M|| over pairs at most
// `step` apart.
inline SpeedThreshold delta_step_for_epsilon(const LpvModel& s, const LpvModel& s_hat,
                                             const ContractionData& contraction, double epsilon,
                                             const IsoTolerances& tol = {}) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("delta_step_for_epsilon: epsilon <= 0");
  const BoundConstants c = compute_constants(s, s_hat, nullptr, contraction, tol);
  const LpvModel s_bar = similarity_transform(s, contraction.S);
  const LpvModel sh_bar = similarity_transform(s_hat, contraction.S_hat);

  detail::IsoTable table;
  for (const Vector& p : s.box().grid()) table.add(p);
  table.evaluate(sh_bar, s_bar, tol);
  std::vector<detail::PairDeviation> pairs;
  const std::size_t n = table.points.size();
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      if (a == b) continue;
      pairs.push_back({(table.points[a] - table.points[b]).norm(), table.deviation(a, b)});
    }
  }
  std::sort(pairs.begin(), pairs.end(),
            [](const auto& l, const auto& r) { return l.distance < r.distance; });
  detail::MismatchProfile profile;
  double running = 0.0;
  for (const auto& pd : pairs) {
    running = std::max(running, pd.deviation);
    profile.distance.push_back(pd.distance);
    profile.running.push_back(running);
  }

  const double factor = g_function(1, 1.0, 0, c);
  auto bound = [&](double step) { return factor * profile.at(step); };

  SpeedThreshold out;
  const double diameter = s.box().diameter();
  const double finest = profile.distance.empty() ? diameter : profile.distance.front();
  out.smallest_bound = bound(finest);
  if (bound(diameter) < epsilon) {
    out.delta_step = diameter;
  } else if (!(out.smallest_bound < epsilon)) {
    out.achieved = false;
    out.delta_step = finest;
    out.bound_above = out.smallest_bound;
  } else {
    double lo = 0.0;
    double hi = diameter;
    while (hi - lo > out.bisection_tol) {
      const double mid = 0.5 * (lo + hi);
      (bound(mid) < epsilon ? lo : hi) = mid;
    }
    out.delta_step = lo;
    out.bound_above = bound(hi);
  }
  out.bound_at_threshold = out.achieved ? bound(out.delta_step) : out.smallest_bound;
  out.mismatch_at_threshold = profile.at(out.delta_step);

  // Independent pass over the same pairs through `mismatch`.
  if (out.achieved) {
    for (const Vector& p1 : table.points) {
      for (const Vector& p2 : table.points) {
        if ((p1 - p2).norm() > out.delta_step || &p1 == &p2) continue;
        out.verified_mismatch =
            std::max(out.verified_mismatch, mismatch(sh_bar, s_bar, p1, p2, tol).deviation);
      }
    }
  }
  return out;
}

struct StabilityThreshold {
  bool feasible = true;
  double alpha_m = 0.0;
  double bound_at_threshold = 0.0;
  std::optional<double> bound_above;  // at alpha_m + bisection tolerance
  double limit_value = 0.0;           // g as alpha -> 0: K K_B K_C
  double bisection_tol = 1e-6;
};

// Largest alpha with g(delta, K_M, 0; alpha) < epsilon (i = 0 is the worst phase).
inline StabilityThreshold alpha_max_for_epsilon(const BoundConstants& c, double epsilon,
                                                std::size_t delta) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("alpha_max_for_epsilon: epsilon <= 0");
  const double K = c.K_M_global;
  auto bound = [&](double a) { return g_with_alpha(delta, K, 0, c, a); };
  StabilityThreshold out;
  out.limit_value = K * c.K_B * c.K_C;
  constexpr double kSaturated = 1.0 - 1e-9;
  if (bound(kSaturated) < epsilon) {
    out.alpha_m = kSaturated;
    out.bound_at_threshold = bound(kSaturated);
    return out;
  }
  if (!(out.limit_value < epsilon)) {
    out.feasible = false;
    out.bound_at_threshold = out.limit_value;
    return out;
  }
  double lo = 0.0;
  double hi = kSaturated;
  while (hi - lo > out.bisection_tol) {
    const double mid = 0.5 * (lo + hi);
    (bound(mid) < epsilon ? lo : hi) = mid;
  }
  out.alpha_m = lo;
  out.bound_at_threshold = bound(lo);
  out.bound_above = bound(hi);
  return out;
}

}  // namespace lpv
