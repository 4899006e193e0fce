#pragma once

// Command implementations behind the `lpvbound` CLI. Each command returns
// the process exit code:
//   0 success, 1 usage/config error, 2 I/O error,
//   3 equivalence/minimality failure, 4 stability failure,
//   5 bound violation detected.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "lpvbound/core.hpp"
#include "lpvbound/error_bound.hpp"
#include "lpvbound/example_model.hpp"
#include "lpvbound/frozen_analysis.hpp"
#include "lpvbound/io.hpp"
#include "lpvbound/local_ident.hpp"
#include "lpvbound/stability_cert.hpp"

namespace lpv::harness {

namespace fs = std::filesystem;
using nlohmann::json;

enum ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kIo = 2,
  kEquivalence = 3,
  kStability = 4,
  kViolation = 5,
};

class ConfigError : public std::invalid_argument {
 public:
  explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

struct ScheduleSpec {
  enum class Kind { kPiecewiseConstant, kSinusoid, kFile } kind = Kind::kPiecewiseConstant;
  std::size_t delta = 1;
  std::vector<Vector> values;
  Vector center;
  Vector amplitude;
  double time_scale = 1.0;
  std::string path;
};

struct InputSpec {
  enum class Kind { kConstant, kFile } kind = Kind::kConstant;
  Vector value;
  std::string path;
};

struct ExperimentConfig {
  std::string model = "paper-example";
  std::string model_hat = "identify";
  double node_spacing = 0.05;
  std::size_t order = 0;
  std::size_t length = 0;
  std::optional<ScheduleSpec> schedule;
  std::optional<InputSpec> input;
  std::optional<std::size_t> horizon;
  std::optional<std::size_t> delta;
  double epsilon = 1e-3;
  double rank_tol = 1e-8;
  double markov_tol = 1e-8;
  double residual_tol = 1e-6;
  InputNorm input_norm = InputNorm::kLinf;
  std::optional<Matrix> P;
  std::optional<Matrix> P_hat;
  std::string out = "out";
  int grid_points = 0;  // 0: per-model default
};

// LPV_GRID_POINTS, when set, overrides every grid resolution.
inline int grid_points_from_env() {
  const char* v = std::getenv("LPV_GRID_POINTS");
  if (v == nullptr || *v == '\0') return 0;
  char* end = nullptr;
  const long n = std::strtol(v, &end, 10);
  if (*end != '\0' || n < 2 || n > 100000) {
    throw ConfigError("LPV_GRID_POINTS must be an integer >= 2");
  }
  return static_cast<int>(n);
}

namespace detail {

inline Vector vector_value(const json& j) {
  if (j.is_number()) return Vector::Constant(1, j.get<double>());
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

inline std::string resolve(const fs::path& base, const std::string& p) {
  if (p.empty() || fs::path(p).is_absolute()) return p;
  return (base / p).string();
}

inline Matrix square_matrix(const json& j, const char* what) {
  const auto n = static_cast<Eigen::Index>(j.size());
  return io::matrix_from_json(j, n, n, what);
}

}  // namespace detail

inline ExperimentConfig config_from_json(const json& j, const fs::path& base = {}) {
  ExperimentConfig c;
  try {
    c.model = j.value("model", c.model);
    c.model_hat = j.value("model_hat", c.model_hat);
    if (c.model != "paper-example") c.model = detail::resolve(base, c.model);
    if (c.model_hat != "identify") c.model_hat = detail::resolve(base, c.model_hat);
    if (j.contains("identification")) {
      const json& id = j.at("identification");
      c.node_spacing = id.value("node_spacing", c.node_spacing);
      c.order = id.value("order", c.order);
      c.length = id.value("length", c.length);
    }
    if (j.contains("schedule")) {
      const json& s = j.at("schedule");
      ScheduleSpec spec;
      const std::string type = s.at("type").get<std::string>();
      if (type == "piecewise-constant") {
        spec.kind = ScheduleSpec::Kind::kPiecewiseConstant;
        spec.delta = s.at("delta").get<std::size_t>();
        for (const json& v : s.at("values")) spec.values.push_back(detail::vector_value(v));
      } else if (type == "sinusoid") {
        spec.kind = ScheduleSpec::Kind::kSinusoid;
        spec.center = detail::vector_value(s.at("center"));
        spec.amplitude = detail::vector_value(s.at("amplitude"));
        spec.time_scale = s.at("time_scale").get<double>();
      } else if (type == "file") {
        spec.kind = ScheduleSpec::Kind::kFile;
        spec.path = detail::resolve(base, s.at("path").get<std::string>());
      } else {
        throw ConfigError("unknown schedule type '" + type + "'");
      }
      c.schedule = spec;
    }
    if (j.contains("input")) {
      const json& s = j.at("input");
      InputSpec spec;
      const std::string type = s.at("type").get<std::string>();
      if (type == "constant") {
        spec.kind = InputSpec::Kind::kConstant;
        spec.value = detail::vector_value(s.at("value"));
      } else if (type == "file") {
        spec.kind = InputSpec::Kind::kFile;
        spec.path = detail::resolve(base, s.at("path").get<std::string>());
      } else {
        throw ConfigError("unknown input type '" + type + "'");
      }
      c.input = spec;
    }
    if (j.contains("horizon")) c.horizon = j.at("horizon").get<std::size_t>();
    if (j.contains("delta")) c.delta = j.at("delta").get<std::size_t>();
    c.epsilon = j.value("epsilon", c.epsilon);
    if (j.contains("tolerances")) {
      const json& t = j.at("tolerances");
      c.rank_tol = t.value("rank_tol", c.rank_tol);
      c.markov_tol = t.value("markov_tol", c.markov_tol);
      c.residual_tol = t.value("residual_tol", c.residual_tol);
    }
    const std::string norm = j.value("input_norm", std::string("linf"));
    if (norm == "l2") {
      c.input_norm = InputNorm::kL2;
    } else if (norm != "linf") {
      throw ConfigError("input_norm must be 'linf' or 'l2'");
    }
    if (j.contains("P")) c.P = detail::square_matrix(j.at("P"), "P");
    if (j.contains("P_hat")) c.P_hat = detail::square_matrix(j.at("P_hat"), "P_hat");
    c.out = detail::resolve(base, j.value("out", c.out));
    c.grid_points = j.value("grid_points", 0);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  if (c.horizon && *c.horizon < 1) throw ConfigError("horizon must be >= 1");
  if (c.delta && *c.delta < 1) throw ConfigError("delta must be >= 1");
  return c;
}

inline ExperimentConfig load_config(const std::string& path) {
  return config_from_json(io::read_json_file(path), fs::path(path).parent_path());
}

struct LoadedPair {
  LpvModel s;
  LpvModel s_hat;
  std::optional<PipelineProvenance> provenance;
};

inline LoadedPair load_pair(const ExperimentConfig& c) {
  int grid = grid_points_from_env();
  if (grid == 0) grid = c.grid_points;
  LoadedPair out;
  if (c.model == "paper-example") {
    out.s = example::two_state_model(grid > 0 ? grid : 31);
  } else {
    out.s = io::load_model(c.model, grid);
  }
  if (c.model_hat == "identify") {
    PipelineResult r = run_local_pipeline(out.s, c.node_spacing, c.order, c.length);
    out.s_hat = r.model;
    out.provenance = r.provenance;
  } else {
    out.s_hat = io::load_model(c.model_hat, grid).with_box(out.s.box());
  }
  return out;
}

inline SchedulingSignal build_schedule(const ExperimentConfig& c, const SchedulingBox& box) {
  if (!c.schedule) throw ConfigError("config has no schedule");
  const ScheduleSpec& s = *c.schedule;
  switch (s.kind) {
    case ScheduleSpec::Kind::kPiecewiseConstant: {
      const std::size_t horizon = c.horizon.value_or(s.values.size() * s.delta - 1);
      return signal_piecewise_constant(box, s.delta, s.values, horizon);
    }
    case ScheduleSpec::Kind::kSinusoid:
      if (!c.horizon) throw ConfigError("sinusoid schedule needs a horizon");
      return signal_sinusoid(box, s.center, s.amplitude, s.time_scale, *c.horizon);
    case ScheduleSpec::Kind::kFile: {
      SchedulingSignal p(box, io::read_signal_csv(s.path, 'p'));
      if (c.horizon && *c.horizon != p.horizon()) {
        throw ConfigError("schedule file horizon differs from configured horizon");
      }
      return p;
    }
  }
  throw ConfigError("bad schedule");
}

inline InputSignal build_input(const ExperimentConfig& c, std::size_t horizon,
                               Eigen::Index n_u) {
  if (!c.input) return InputSignal::constant(Vector::Ones(n_u), horizon);
  if (c.input->kind == InputSpec::Kind::kConstant) {
    if (c.input->value.size() != n_u) throw ConfigError("input value has wrong dimension");
    return InputSignal::constant(c.input->value, horizon);
  }
  InputSignal u(io::read_signal_csv(c.input->path, 'u'));
  if (u.horizon() != horizon) throw ConfigError("input file horizon differs from schedule");
  return u;
}

inline std::size_t effective_delta(const ExperimentConfig& c) {
  if (c.delta) return *c.delta;
  if (c.schedule && c.schedule->kind == ScheduleSpec::Kind::kPiecewiseConstant) {
    return c.schedule->delta;
  }
  return 1;
}

inline IsoTolerances iso_tolerances(const ExperimentConfig& c) {
  return IsoTolerances{c.rank_tol, c.residual_tol};
}

struct Certification {
  json report;
  int exit_code = kOk;
  std::optional<ContractedPair> contraction;
};

// Minimality and equivalence gates (exit 3), then quadratic stability (exit 4).
inline Certification certify_pair(const ExperimentConfig& c, const LoadedPair& pair) {
  Certification out;
  const MinimalityReport min_s = is_frozen_minimal(pair.s, c.rank_tol);
  const MinimalityReport min_h = is_frozen_minimal(pair.s_hat, c.rank_tol);
  const EquivalenceReport eq = are_frozen_equivalent(pair.s, pair.s_hat, c.markov_tol);
  out.report["minimality"] = io::to_json(min_s);
  out.report["minimality_hat"] = io::to_json(min_h);
  out.report["equivalence"] = io::to_json(eq);
  if (pair.provenance) out.report["identification"] = io::to_json(*pair.provenance);
  if (!min_s.minimal || !min_h.minimal || !eq.equivalent) {
    out.exit_code = kEquivalence;
    out.report["status"] = "equivalence/minimality failure";
    return out;
  }
  try {
    out.contraction = contract_pair(pair.s, pair.s_hat, c.P, c.P_hat);
    out.report["certificate"] = io::certificate_json(*out.contraction);
  } catch (const StabilityError& e) {
    out.exit_code = kStability;
    out.report["status"] = std::string("stability failure: ") + e.what();
    return out;
  }
  out.report["status"] = "certified";
  return out;
}

inline void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory '" + dir + "'");
}

// Maps library exceptions to exit codes and prints the message.
template <typename Fn>
int guarded(std::ostream& err, Fn&& fn) {
  try {
    return fn();
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kIo;
  } catch (const NonEquivalentError& e) {
    err << "error: " << e.what() << "\n";
    return kEquivalence;
  } catch (const NonMinimalError& e) {
    err << "error: " << e.what() << "\n";
    return kEquivalence;
  } catch (const StabilityError& e) {
    err << "error: " << e.what() << "\n";
    return kStability;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  }
}

inline int cmd_certify(const ExperimentConfig& c, std::ostream& out, std::ostream& err) {
  return guarded(err, [&]() -> int {
    const LoadedPair pair = load_pair(c);
    Certification cert = certify_pair(c, pair);
    ensure_dir(c.out);
    io::write_json_file((fs::path(c.out) / "certify.json").string(), cert.report);
    out << cert.report.dump(2) << "\n";
    return cert.exit_code;
  });
}

struct BoundRun {
  BoundReport report;
  SchedulingSignal schedule;
};

inline BoundRun run_bound(const ExperimentConfig& c, const LoadedPair& pair,
                          const ContractedPair& contraction) {
  BoundRun run;
  run.schedule = build_schedule(c, pair.s.box());
  const InputSignal u = build_input(c, run.schedule.horizon(), pair.s.n_u());
  run.report = check_bound(pair.s, pair.s_hat, u, run.schedule, effective_delta(c),
                           contraction.data, c.input_norm, iso_tolerances(c));
  return run;
}

inline int cmd_bound(const ExperimentConfig& c, std::ostream& out, std::ostream& err) {
  return guarded(err, [&]() -> int {
    const LoadedPair pair = load_pair(c);
    Certification cert = certify_pair(c, pair);
    if (cert.exit_code != kOk) {
      err << cert.report.dump(2) << "\n";
      return cert.exit_code;
    }
    const BoundRun run = run_bound(c, pair, *cert.contraction);
    ensure_dir(c.out);
    const fs::path dir(c.out);
    io::write_text_file((dir / "bound.csv").string(), io::bound_csv(run.report));
    json summary = io::summary_json(run.report);
    summary["certificate"] = cert.report["certificate"];
    io::write_json_file((dir / "summary.json").string(), summary);
    io::write_text_file((dir / "plot.gp").string(),
                        io::gnuplot_script("bound.csv", "output difference vs. bound", 3, 4, 5));
    out << summary.dump(2) << "\n";
    return run.report.violations > 0 ? kViolation : kOk;
  });
}

inline json thresholds_json(const ExperimentConfig& c, const LoadedPair& pair,
                            const ContractedPair& contraction) {
  const IsoTolerances tol = iso_tolerances(c);
  const BoundConstants k = compute_constants(pair.s, pair.s_hat, nullptr, contraction.data, tol);
  const SwitchingThreshold sw = delta_min_for_epsilon(k, c.epsilon, true);
  const SpeedThreshold sp = delta_step_for_epsilon(pair.s, pair.s_hat, contraction.data,
                                                   c.epsilon, tol);
  const std::size_t delta = effective_delta(c);
  const StabilityThreshold st = alpha_max_for_epsilon(k, c.epsilon, delta);
  json j;
  j["epsilon"] = c.epsilon;
  j["constants"] = io::to_json(k);
  j["delta_m"] = sw.delta_m;
  // Phases i <= delta_m of each constant interval are not covered by delta_m.
  j["pre_threshold_phases"] = sw.delta_m;
  j["delta_m_verification"] = {
      {"bound_at_threshold", sw.bound_at_threshold},
      {"bound_below", sw.bound_below ? json(*sw.bound_below) : json(nullptr)},
      {"passed", sw.bound_at_threshold < c.epsilon &&
                     (!sw.bound_below || *sw.bound_below >= c.epsilon)}};
  j["delta_step"] = sp.delta_step;
  j["delta_step_verification"] = {
      {"achieved", sp.achieved},
      {"bound_at_threshold", sp.bound_at_threshold},
      {"bound_above", sp.bound_above ? json(*sp.bound_above) : json(nullptr)},
      {"mismatch_at_threshold", sp.mismatch_at_threshold},
      {"verified_mismatch", sp.verified_mismatch},
      {"smallest_bound", sp.smallest_bound},
      {"bisection_tol", sp.bisection_tol},
      {"passed", sp.achieved ? (sp.bound_at_threshold < c.epsilon &&
                                (!sp.bound_above || *sp.bound_above >= c.epsilon))
                             : sp.smallest_bound >= c.epsilon}};
  j["alpha_m"] = st.feasible ? json(st.alpha_m) : json(nullptr);
  j["alpha_m_verification"] = {
      {"feasible", st.feasible},
      {"delta", delta},
      {"bound_at_threshold", st.bound_at_threshold},
      {"bound_above", st.bound_above ? json(*st.bound_above) : json(nullptr)},
      {"limit_value", st.limit_value},
      {"bisection_tol", st.bisection_tol},
      {"passed", st.feasible ? (st.bound_at_threshold < c.epsilon &&
                                (!st.bound_above || *st.bound_above >= c.epsilon))
                             : st.limit_value >= c.epsilon}};
  return j;
}

inline int cmd_thresholds(const ExperimentConfig& c, std::ostream& out, std::ostream& err) {
  return guarded(err, [&]() -> int {
    if (!(c.epsilon > 0.0)) throw ConfigError("epsilon must be > 0");
    const LoadedPair pair = load_pair(c);
    Certification cert = certify_pair(c, pair);
    if (cert.exit_code != kOk) {
      err << cert.report.dump(2) << "\n";
      return cert.exit_code;
    }
    const json j = thresholds_json(c, pair, *cert.contraction);
    ensure_dir(c.out);
    io::write_json_file((fs::path(c.out) / "thresholds.json").string(), j);
    out << j.dump(2) << "\n";
    return kOk;
  });
}

struct FigureSpec {
  std::string name;
  std::string title;
  ScheduleSpec schedule;
  std::size_t horizon;
};

inline std::vector<FigureSpec> example_figures() {
  std::vector<FigureSpec> figs;
  ScheduleSpec pwc;
  pwc.kind = ScheduleSpec::Kind::kPiecewiseConstant;
  pwc.delta = example::kSwitchingDelta;
  pwc.values = example::switching_levels();
  figs.push_back({"fig1", "piecewise-constant p, dwell 10", pwc, example::kSwitchingHorizon});
  for (const auto& [name, scale] : {std::pair{"fig2", 5.0}, std::pair{"fig3", 2.0}}) {
    ScheduleSpec sin;
    sin.kind = ScheduleSpec::Kind::kSinusoid;
    sin.center = Vector::Constant(1, 0.3);
    sin.amplitude = Vector::Constant(1, 0.1);
    sin.time_scale = scale;
    figs.push_back({name, std::string("p(t) = 0.3 + 0.1 sin(t/") +
                              (scale == 5.0 ? "5" : "2") + ")",
                    sin, example::kSinusoidHorizon});
  }
  return figs;
}

// Built-in example end to end: identification, certification and the three
// figure runs with u = 1.
inline int cmd_reproduce_example(ExperimentConfig c, std::ostream& out, std::ostream& err) {
  return guarded(err, [&]() -> int {
    c.model = "paper-example";
    c.model_hat = "identify";
    const LoadedPair pair = load_pair(c);
    Certification cert = certify_pair(c, pair);
    if (cert.exit_code != kOk) {
      err << cert.report.dump(2) << "\n";
      return cert.exit_code;
    }
    ensure_dir(c.out);
    const fs::path dir(c.out);
    io::write_json_file((dir / "provenance.json").string(), io::to_json(*pair.provenance));
    io::write_json_file((dir / "model.json").string(), io::to_json(pair.s));
    io::write_json_file((dir / "model_hat.json").string(), io::to_json(pair.s_hat));
    json summary;
    summary["certificate"] = cert.report["certificate"];
    std::size_t violations = 0;
    for (const FigureSpec& fig : example_figures()) {
      ExperimentConfig run_cfg = c;
      run_cfg.schedule = fig.schedule;
      run_cfg.horizon = fig.horizon;
      run_cfg.delta.reset();
      run_cfg.input = InputSpec{InputSpec::Kind::kConstant, Vector::Ones(1), {}};
      const BoundRun run = run_bound(run_cfg, pair, *cert.contraction);
      io::write_text_file((dir / (fig.name + ".csv")).string(),
                          io::figure_csv(run.report, run.schedule));
      io::write_text_file((dir / (fig.name + ".gp")).string(),
                          io::gnuplot_script(fig.name + ".csv", fig.title, 5, 6, 7));
      summary[fig.name] = io::summary_json(run.report);
      violations += run.report.violations;
    }
    summary["max_difference_increases_with_frequency"] =
        summary["fig3"]["max_measured"].get<double>() >
        summary["fig2"]["max_measured"].get<double>();
    io::write_json_file((dir / "summary.json").string(), summary);
    out << summary.dump(2) << "\n";
    return violations > 0 ? kViolation : kOk;
  });
}

}  // namespace lpv::harness
