#pragma once

// File formats: JSON model documents, CSV signals, JSON/CSV reports and
// gnuplot scripts.

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "lpvbound/core.hpp"
#include "lpvbound/error_bound.hpp"
#include "lpvbound/frozen_analysis.hpp"
#include "lpvbound/local_ident.hpp"
#include "lpvbound/stability_cert.hpp"

namespace lpv::io {

using nlohmann::json;

inline json to_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline json to_json(const Vector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

inline Matrix matrix_from_json(const json& j, Eigen::Index rows, Eigen::Index cols,
                               const std::string& what) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != rows) {
    throw IoError(what + ": expected " + std::to_string(rows) + " rows");
  }
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const json& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
      throw IoError(what + ": expected " + std::to_string(cols) + " columns");
    }
    for (Eigen::Index k = 0; k < cols; ++k) {
      m(i, k) = row[static_cast<std::size_t>(k)].get<double>();
    }
  }
  return m;
}

inline Vector vector_from_json(const json& j, Eigen::Index size, const std::string& what) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != size) {
    throw IoError(what + ": expected " + std::to_string(size) + " entries");
  }
  Vector v(size);
  for (Eigen::Index i = 0; i < size; ++i) v(i) = j[static_cast<std::size_t>(i)].get<double>();
  return v;
}

inline json to_json(const MatrixFamily& f) {
  json out;
  if (f.is_affine()) {
    out["variant"] = "affine";
    out["coefficients"] = json::array();
    for (const Matrix& m : f.as_affine().coefficients) out["coefficients"].push_back(to_json(m));
  } else {
    out["variant"] = "grid";
    out["nodes"] = f.as_grid().nodes;
    out["values"] = json::array();
    for (const Matrix& m : f.as_grid().values) out["values"].push_back(to_json(m));
  }
  return out;
}

inline MatrixFamily family_from_json(const json& j, Eigen::Index rows, Eigen::Index cols,
                                     int n_p, const std::string& what) {
  const std::string variant = j.at("variant").get<std::string>();
  if (variant == "affine") {
    const json& coeffs = j.at("coefficients");
    if (!coeffs.is_array() || static_cast<int>(coeffs.size()) != n_p + 1) {
      throw IoError(what + ": affine family needs n_p + 1 coefficient matrices");
    }
    std::vector<Matrix> ms;
    for (const json& m : coeffs) ms.push_back(matrix_from_json(m, rows, cols, what));
    return MatrixFamily::affine(std::move(ms));
  }
  if (variant == "grid") {
    auto nodes = j.at("nodes").get<std::vector<std::vector<double>>>();
    if (static_cast<int>(nodes.size()) != n_p) {
      throw IoError(what + ": grid family needs one node axis per scheduling dimension");
    }
    std::vector<Matrix> ms;
    for (const json& m : j.at("values")) ms.push_back(matrix_from_json(m, rows, cols, what));
    return MatrixFamily::grid(std::move(nodes), std::move(ms));
  }
  throw IoError(what + ": unknown family variant '" + variant + "'");
}

inline json to_json(const LpvModel& s) {
  json out;
  out["n_x"] = s.n_x();
  out["n_u"] = s.n_u();
  out["n_y"] = s.n_y();
  out["n_p"] = s.n_p();
  out["box"] = {{"p_min", to_json(s.box().p_min())},
                {"p_max", to_json(s.box().p_max())},
                {"grid_points", s.box().grid_points_per_axis()}};
  out["A"] = to_json(s.A());
  out["B"] = to_json(s.B());
  out["C"] = to_json(s.C());
  return out;
}

inline LpvModel model_from_json(const json& j, int grid_points_override = 0) {
  try {
    const auto nx = j.at("n_x").get<Eigen::Index>();
    const auto nu = j.at("n_u").get<Eigen::Index>();
    const auto ny = j.at("n_y").get<Eigen::Index>();
    const int np = j.at("n_p").get<int>();
    int grid = j.at("box").value("grid_points", 31);
    if (grid_points_override > 0) grid = grid_points_override;
    SchedulingBox box(vector_from_json(j.at("box").at("p_min"), np, "box.p_min"),
                      vector_from_json(j.at("box").at("p_max"), np, "box.p_max"), grid);
    return LpvModel(family_from_json(j.at("A"), nx, nx, np, "A"),
                    family_from_json(j.at("B"), nx, nu, np, "B"),
                    family_from_json(j.at("C"), ny, nx, np, "C"), std::move(box));
  } catch (const json::exception& e) {
    throw IoError(std::string("model document: ") + e.what());
  }
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw IoError("'" + path + "': " + e.what());
  }
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << text;
  if (!out) throw IoError("failed writing '" + path + "'");
}

inline void write_json_file(const std::string& path, const json& j) {
  write_text_file(path, j.dump(2) + "\n");
}

inline LpvModel load_model(const std::string& path, int grid_points_override = 0) {
  return model_from_json(read_json_file(path), grid_points_override);
}

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// CSV with header t,<prefix>_1..<prefix>_n; rows must be t = 0, 1, ...
inline std::vector<Vector> read_signal_csv(const std::string& path, char prefix) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw IoError("'" + path + "': empty signal file");
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) header.push_back(cell);
  }
  if (header.size() < 2 || header[0] != "t") {
    throw IoError("'" + path + "': header must start with t");
  }
  for (std::size_t k = 1; k < header.size(); ++k) {
    const std::string want = std::string(1, prefix) + "_" + std::to_string(k);
    if (header[k] != want) throw IoError("'" + path + "': expected column " + want);
  }
  const auto dim = static_cast<Eigen::Index>(header.size() - 1);
  std::vector<Vector> samples;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> vals;
    try {
      while (std::getline(ss, cell, ',')) vals.push_back(std::stod(cell));
    } catch (const std::exception&) {
      throw IoError("'" + path + "': non-numeric cell");
    }
    if (static_cast<Eigen::Index>(vals.size()) != dim + 1) {
      throw IoError("'" + path + "': wrong number of columns");
    }
    if (static_cast<std::size_t>(vals[0]) != samples.size()) {
      throw IoError("'" + path + "': t must count 0, 1, 2, ...");
    }
    samples.push_back(Eigen::Map<const Vector>(vals.data() + 1, dim));
  }
  if (samples.empty()) throw IoError("'" + path + "': no samples");
  return samples;
}

inline std::string signal_csv(const std::vector<Vector>& samples, char prefix) {
  std::string out = "t";
  const Eigen::Index dim = samples.empty() ? 0 : samples.front().size();
  for (Eigen::Index k = 1; k <= dim; ++k) out += "," + std::string(1, prefix) + "_" + std::to_string(k);
  out += "\n";
  for (std::size_t t = 0; t < samples.size(); ++t) {
    out += std::to_string(t);
    for (Eigen::Index k = 0; k < dim; ++k) out += "," + format_double(samples[t](k));
    out += "\n";
  }
  return out;
}

// --- reports ---------------------------------------------------------------

inline json to_json(const MinimalityReport& r) {
  return {{"minimal", r.minimal},
          {"grid_resolution", r.grid_resolution},
          {"worst_p", to_json(r.worst_p)},
          {"worst_residual", r.worst_sigma_min},
          {"tolerances", {{"rank_tol", r.rank_tol}}}};
}

inline json to_json(const EquivalenceReport& r) {
  return {{"equivalent", r.equivalent},
          {"grid_resolution", r.grid_resolution},
          {"worst_p", to_json(r.worst_p)},
          {"worst_residual", r.worst_residual},
          {"tolerances", {{"markov_tol", r.tol}}}};
}

inline json certificate_json(const ContractedPair& pair) {
  return {{"P", to_json(pair.cert.P)},
          {"S", to_json(pair.cert.S)},
          {"margin", pair.cert.margin},
          {"P_hat", to_json(pair.cert_hat.P)},
          {"S_hat", to_json(pair.cert_hat.S)},
          {"margin_hat", pair.cert_hat.margin},
          {"alpha", pair.data.alpha},
          {"alpha_hat", pair.data.alpha_hat},
          {"mu1", pair.data.mu1},
          {"grid_resolution", pair.data.grid_resolution},
          {"refinement_warning", pair.data.refinement_warning}};
}

inline json to_json(const BoundConstants& c) {
  return {{"K_B", c.K_B},       {"K_C", c.K_C},
          {"K_T", c.K_T},       {"K_M_signal", c.K_M_signal},
          {"K_M_global", c.K_M_global}, {"alpha", c.alpha},
          {"alpha_hat", c.alpha_hat},   {"mu1", c.mu1},
          {"grid_resolution", c.grid_resolution},
          {"evaluation_points", c.evaluation_points}};
}

inline std::string bound_csv(const BoundReport& r) {
  std::string out = "t,i,measured,envelope_signal,envelope_global,violated\n";
  for (const BoundRow& row : r.rows) {
    out += std::to_string(row.t) + "," + std::to_string(row.i) + "," +
           format_double(row.measured) + "," + format_double(row.envelope_signal) + "," +
           format_double(row.envelope_global) + "," + (row.violated ? "1" : "0") + "\n";
  }
  return out;
}

// Figure data: the bound columns plus schedule and both outputs (SISO first
// output channel).
inline std::string figure_csv(const BoundReport& r, const SchedulingSignal& p) {
  std::string out = "t,p,y,y_hat,difference,envelope_signal,envelope_global\n";
  for (const BoundRow& row : r.rows) {
    out += std::to_string(row.t) + "," + format_double(p[row.t](0)) + "," +
           format_double(r.y[row.t](0)) + "," + format_double(r.y_hat[row.t](0)) + "," +
           format_double(row.measured) + "," + format_double(row.envelope_signal) + "," +
           format_double(row.envelope_global) + "\n";
  }
  return out;
}

inline json summary_json(const BoundReport& r) {
  return {{"delta", r.delta},
          {"input_norm", r.input_norm == InputNorm::kLinf ? "linf" : "l2"},
          {"u_norm", r.u_norm},
          {"constants", to_json(r.constants)},
          {"rows", r.rows.size()},
          {"max_measured", r.max_measured},
          {"max_envelope", r.max_envelope},
          {"tightness_ratio", r.tightness_ratio},
          {"violations", r.violations}};
}

// gnuplot script; CSV time is 0-based (the first sample is t = 0).
inline std::string gnuplot_script(const std::string& csv_name, const std::string& title,
                                  int measured_col, int env_signal_col, int env_global_col) {
  std::ostringstream s;
  s << "# gnuplot script; data time axis is 0-based\n"
    << "set datafile separator ','\n"
    << "set key top right\n"
    << "set xlabel 't'\n"
    << "set ylabel '|y - y_hat|'\n"
    << "set title '" << title << "'\n"
    << "set logscale y\n"
    << "plot '" << csv_name << "' using 1:($" << measured_col
    << " > 0 ? $" << measured_col << " : NaN) every ::1 with linespoints title 'measured', \\\n"
    << "     '' using 1:" << env_signal_col << " every ::1 with lines title 'envelope K_M(p)', \\\n"
    << "     '' using 1:" << env_global_col << " every ::1 with lines title 'envelope K_M'\n";
  return s.str();
}

inline json to_json(const PipelineProvenance& p) {
  json out;
  out["nodes"] = json::array();
  for (const Vector& n : p.nodes) out["nodes"].push_back(to_json(n));
  out["hankel_singular_values"] = json::array();
  for (const Vector& sv : p.hankel_singular_values) out["hankel_singular_values"].push_back(to_json(sv));
  out["canonical_residuals"] = p.canonical_residuals;
  out["canonical_rows"] = p.canonical_rows;
  out["node_equivalence_residual"] = p.node_equivalence_residual;
  out["inter_node_residual"] = p.inter_node_residual;
  out["order"] = p.order;
  out["length"] = p.length;
  out["node_spacing"] = p.node_spacing;
  return out;
}

}  // namespace lpv::io
