#pragma once

// CSV / JSON readers for sequences, vectors, weights and matrices, and JSON
// serialization of every report type. Complex numbers are "re,im" pairs in
// CSV and [re, im] arrays in JSON; a bare number is a real entry.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "qvar/analyticity.hpp"
#include "qvar/errors.hpp"
#include "qvar/experiments.hpp"
#include "qvar/lp_model.hpp"
#include "qvar/semigroups.hpp"
#include "qvar/types.hpp"
#include "qvar/variation.hpp"

namespace qvar::io {

using nlohmann::json;

/// "%.17g": round-trip exact.
inline std::string format_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string read_text(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline double parse_number(const std::string& tok, const std::string& where) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(tok, &used);
  } catch (const std::exception&) {
    throw InputError("malformed number '" + tok + "' in " + where);
  }
  while (used < tok.size() && std::isspace(static_cast<unsigned char>(tok[used]))) ++used;
  if (used != tok.size()) throw InputError("malformed number '" + tok + "' in " + where);
  return v;
}

/// Rows of comma-separated numbers; blank lines and '#' comments are skipped.
inline std::vector<std::vector<double>> parse_csv_rows(const std::string& text, const std::string& where) {
  std::vector<std::vector<double>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::vector<double> row;
    std::stringstream ls(line);
    std::string tok;
    while (std::getline(ls, tok, ',')) row.push_back(parse_number(tok, where));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline std::vector<Complex> parse_complex_column(const std::string& text, const std::string& where) {
  std::vector<Complex> out;
  for (const auto& row : parse_csv_rows(text, where)) {
    if (row.size() == 1) out.emplace_back(row[0], 0.0);
    else if (row.size() == 2) out.emplace_back(row[0], row[1]);
    else throw InputError("expected 're' or 're,im' per line in " + where);
  }
  return out;
}

inline ScalarSequence read_sequence(const std::string& path) {
  return ScalarSequence(parse_complex_column(read_text(path), path));
}

inline CVector read_vector(const std::string& path) {
  const auto v = parse_complex_column(read_text(path), path);
  return Eigen::Map<const CVector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

inline std::vector<double> read_weights(const std::string& path) {
  std::vector<double> out;
  for (const auto& row : parse_csv_rows(read_text(path), path)) {
    if (row.size() != 1) throw InputError("expected one weight per line in " + path);
    out.push_back(row[0]);
  }
  return out;
}

inline Complex complex_from_json(const json& j) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number()) {
    return {j[0].get<double>(), j[1].get<double>()};
  }
  throw InputError("complex entries must be numbers or [re, im] pairs");
}

inline json complex_to_json(Complex z) { return json::array({z.real(), z.imag()}); }

/// Square matrix from CSV: each row holds N reals or N (re, im) pairs.
inline CMatrix parse_matrix_csv(const std::string& text, const std::string& where) {
  const auto rows = parse_csv_rows(text, where);
  const auto n = static_cast<Eigen::Index>(rows.size());
  if (n == 0) throw InputError("empty matrix in " + where);
  const std::size_t width = rows.front().size();
  for (const auto& r : rows) {
    if (r.size() != width) throw InputError("ragged matrix rows in " + where);
  }
  const bool complex = width == 2 * rows.size();
  if (!complex && width != rows.size()) throw InputError("matrix in " + where + " is not square");
  CMatrix m(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& r = rows[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < n; ++j) {
      m(i, j) = complex ? Complex(r[2 * static_cast<std::size_t>(j)], r[2 * static_cast<std::size_t>(j) + 1])
                        : Complex(r[static_cast<std::size_t>(j)], 0.0);
    }
  }
  return m;
}

struct MatrixFile {
  CMatrix matrix;
  std::vector<double> weights;  // empty when the file carries none
};

inline MatrixFile read_matrix_file(const std::string& path) {
  const std::string text = read_text(path);
  if (path.size() >= 5 && path.substr(path.size() - 5) == ".json") {
    json j;
    try {
      j = json::parse(text);
    } catch (const json::exception& e) {
      throw InputError("invalid JSON in '" + path + "': " + e.what());
    }
    if (!j.contains("matrix") || !j["matrix"].is_array()) throw InputError("'" + path + "' has no matrix array");
    const auto& rows = j["matrix"];
    const auto n = static_cast<Eigen::Index>(rows.size());
    MatrixFile out{CMatrix(n, n), {}};
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto& r = rows[static_cast<std::size_t>(i)];
      if (!r.is_array() || static_cast<Eigen::Index>(r.size()) != n) throw InputError("matrix in '" + path + "' is not square");
      for (Eigen::Index k = 0; k < n; ++k) out.matrix(i, k) = complex_from_json(r[static_cast<std::size_t>(k)]);
    }
    if (j.contains("weights")) out.weights = j["weights"].get<std::vector<double>>();
    return out;
  }
  return {parse_matrix_csv(text, path), {}};
}

inline SpacePtr make_space(std::size_t n, const std::vector<double>& weights) {
  if (weights.empty()) return MeasureSpace::uniform(n);
  if (weights.size() != n) throw InputError("weight count does not match the operator size");
  return std::make_shared<const MeasureSpace>(weights);
}

inline json to_json(const NormEstimate& e) {
  return {{"lower", e.lower}, {"upper", e.upper}, {"exact", e.exact}};
}

/// Infinite values are written as the string "inf" (JSON has no infinity).
inline json number_or_inf(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

inline json to_json(const StolzResult& s) {
  json j = {{"K_min", number_or_inf(s.k_min)}, {"trivial", s.trivial}};
  j["gamma_min"] = s.gamma_min ? json(*s.gamma_min) : json(nullptr);
  return j;
}

inline json to_json(const AnalyticityReport& r, const std::string& operator_id, double p) {
  json j;
  j["operator_id"] = operator_id;
  j["p"] = p;
  j["grids"] = {{"n_max", r.profile.upper.size()},
                {"ritt_radii", r.ritt.radii},
                {"ritt_angles_per_radius", r.ritt.angles_per_radius}};
  j["profiles"] = {{"diff_upper", r.profile.upper}, {"diff_lower", r.profile.lower}};
  j["power_bound"] = to_json(r.profile.power_bound);
  j["ritt_sup"] = to_json(r.ritt.sup);
  j["ritt_sup_is_grid_lower_estimate"] = true;
  j["ritt_argmax"] = complex_to_json(r.ritt.argmax);
  if (r.stolz) {
    j["K_min"] = number_or_inf(r.stolz->k_min);
    j["gamma_min"] = r.stolz->gamma_min ? json(*r.stolz->gamma_min) : json(nullptr);
  } else {
    j["K_min"] = nullptr;
    j["gamma_min"] = nullptr;
  }
  j["profile_bounded"] = r.profile_bounded;
  j["verdict"] = to_string(r.verdict);
  return j;
}

inline json to_json(const ExperimentConfig& c) {
  json j = {{"p", c.p},
            {"q", c.q},
            {"mode", c.mode == NormMode::variation ? "variation" : "oscillation"},
            {"truncations", c.truncations},
            {"sample_budget", c.sample_budget},
            {"ascent_steps", c.ascent_steps},
            {"seed", c.seed},
            {"stable_threshold", c.stable_threshold},
            {"growing_threshold", c.growing_threshold}};
  if (c.partition) {
    j["partition"] = std::vector<std::size_t>(c.partition->boundaries().begin(), c.partition->boundaries().end());
  }
  return j;
}

inline json to_json(const EmpiricalReport& r) {
  json j;
  j["operator_id"] = r.operator_id;
  j["family"] = to_string(r.family);
  j["order"] = r.order;
  if (r.time_step > 0.0) j["time_step"] = r.time_step;
  j["config"] = to_json(r.config);
  json rows = json::array();
  for (std::size_t i = 0; i < r.truncations.size(); ++i) {
    rows.push_back({{"truncation", r.truncations[i]},
                    {"constant", r.constants[i]},
                    {"best_sample", r.best_sample_constants[i]}});
  }
  j["constants"] = rows;
  json w = json::array();
  for (const auto& z : r.witness) w.push_back(complex_to_json(z));
  j["witness"] = w;
  j["growth"] = r.growth;
  j["verdict"] = to_string(r.verdict);
  j["jumps"] = {{"taus", r.jumps.taus},
                {"scaled_jump_norms", r.jumps.scaled_jump_norms},
                {"max_pointwise_violation", r.jumps.max_pointwise_violation},
                {"ok", r.jumps.ok}};
  j["stolz_K"] = r.stolz_k ? number_or_inf(*r.stolz_k) : json(nullptr);
  if (!r.refinement_profile.empty()) j["dyadic_refinement_profile"] = r.refinement_profile;
  j["runtime_seconds"] = r.runtime_seconds;
  return j;
}

inline json to_json(const SweepReport& s) {
  json rows = json::array();
  for (std::size_t i = 0; i < s.qs.size(); ++i) rows.push_back({{"q", s.qs[i]}, {"constant", s.constants[i]}});
  json j = {{"truncation", s.truncation}, {"constants", rows}};
  j["o2_constant"] = s.o2_constant ? json(*s.o2_constant) : json(nullptr);
  j["operator_id"] = s.last_run.operator_id;
  j["family"] = to_string(s.last_run.family);
  return j;
}

/// Report JSON with the runtime field removed; the deterministic part.
inline json without_runtime(json j) {
  j.erase("runtime_seconds");
  return j;
}

inline std::string csv_constants(const EmpiricalReport& r) {
  std::string out = "truncation,constant\n";
  for (std::size_t i = 0; i < r.truncations.size(); ++i) {
    out += std::to_string(r.truncations[i]) + "," + format_double(r.constants[i]) + "\n";
  }
  return out;
}

inline std::string csv_sweep(const SweepReport& s) {
  std::string out = "q,constant,norm\n";
  for (std::size_t i = 0; i < s.qs.size(); ++i) {
    out += format_double(s.qs[i]) + "," + format_double(s.constants[i]) + ",vq\n";
  }
  if (s.o2_constant) out += "2," + format_double(*s.o2_constant) + ",o2\n";
  return out;
}

inline std::string csv_profile(const DiffProfile& p) {
  std::string out = "n,lower,upper\n";
  for (std::size_t i = 0; i < p.upper.size(); ++i) {
    out += std::to_string(i + 1) + "," + format_double(p.lower[i]) + "," + format_double(p.upper[i]) + "\n";
  }
  return out;
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write '" + path + "'");
  out << text;
}

}  // namespace qvar::io
