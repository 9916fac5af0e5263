#include "jinv/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>

namespace jinv::io {

namespace {

Vector<double> vector_from(const json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_array()) {
    throw ParseError(std::string("missing array '") + key + "'");
  }
  const auto& arr = j.at(key);
  Vector<double> out(static_cast<Eigen::Index>(arr.size()));
  for (std::size_t i = 0; i < arr.size(); ++i) {
    if (!arr[i].is_number()) throw ParseError(std::string("non-numeric entry in '") + key + "'");
    out[static_cast<Eigen::Index>(i)] = arr[i].get<double>();
  }
  return out;
}

json array_of(const Vector<double>& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

json number_or_null(double x) { return std::isnan(x) ? json(nullptr) : json(x); }

Eigen::Index size_from(const json& j) {
  if (!j.contains("n") || !j.at("n").is_number_integer()) throw ParseError("missing integer 'n'");
  const auto n = j.at("n").get<long long>();
  if (n < 1) throw ParseError("'n' must be >= 1");
  return static_cast<Eigen::Index>(n);
}

double number_from(const json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_number()) throw ParseError(std::string("missing number '") + key + "'");
  return j.at(key).get<double>();
}

}  // namespace

JacobiOperator<double> operator_from_json(const json& j) {
  if (!j.is_object()) throw ParseError("operator file must hold a JSON object");
  const Eigen::Index n = size_from(j);
  Vector<double> v = vector_from(j, "v");
  Vector<double> u = j.contains("u") ? vector_from(j, "u") : Vector<double>(0);
  const double edge = number_from(j, "u_edge");
  if (v.size() != n) throw ParseError("'v' must have n entries");
  if (u.size() != n - 1) throw ParseError("'u' must have n-1 entries");
  try {
    return make_operator<double>(n, std::move(v), std::move(u), edge);
  } catch (const Error& e) {
    throw ParseError(e.what());
  }
}

json to_json(const JacobiOperator<double>& op) {
  return json{{"n", op.size()}, {"v", array_of(op.v)}, {"u", array_of(op.u)}, {"u_edge", op.u_edge}};
}

SpectralData<double> spectral_from_json(const json& j) {
  if (!j.is_object()) throw ParseError("spectral file must hold a JSON object");
  const Eigen::Index n = size_from(j);
  SpectralData<double> data{Grid<double>(n), vector_from(j, "levels"), vector_from(j, "weights"), Orientation::left};
  if (j.contains("delta")) {
    const double delta = number_from(j, "delta");
    if (std::abs(delta - data.grid.step()) > 1e-12 * data.grid.step()) {
      throw ParseError("'delta' does not match pi/(n+1)");
    }
  }
  if (j.contains("orientation")) {
    const auto& o = j.at("orientation");
    if (o == "left") {
      data.orientation = Orientation::left;
    } else if (o == "right") {
      data.orientation = Orientation::right;
    } else {
      throw ParseError("'orientation' must be \"left\" or \"right\"");
    }
  }
  try {
    validate(data);
  } catch (const Error& e) {
    throw ParseError(e.what());
  }
  return data;
}

json to_json(const SpectralData<double>& data) {
  return json{{"n", data.grid.size()},
              {"delta", data.grid.step()},
              {"levels", array_of(data.levels)},
              {"weights", array_of(data.weights)},
              {"orientation", data.orientation == Orientation::left ? "left" : "right"}};
}

json to_json(const Diagnostics<double>& d) {
  json j{{"gl_residual", d.gl_residual},
         {"gl_condition", d.gl_condition},
         {"k_cross_check", d.k_cross_check},
         {"leading_norm_defect", d.leading_norm_defect},
         {"orthonormality_defect", d.orthonormality_defect},
         {"leakage", d.leakage},
         {"relative_leakage", d.relative_leakage},
         {"recursion_synthesis_gap", number_or_null(d.recursion_synthesis_gap)},
         {"min_recursion_determinant", number_or_null(d.min_recursion_determinant)},
         {"recursion_generic_rows", d.recursion_generic_rows},
         {"recursion_fallback_rows", d.recursion_fallback_rows}};
  if (!d.recursion_error.empty()) j["recursion_error"] = d.recursion_error;
  return j;
}

json report_json(const RecoveredSystem<double>& rec) {
  json methods = json::object();
  if (rec.synthesis_op) methods["synthesis"] = to_json(*rec.synthesis_op);
  if (rec.recursion_op) methods["recursion"] = to_json(*rec.recursion_op);
  return json{{"method", to_string(rec.method)},
              {"operator", to_json(rec.op)},
              {"methods", methods},
              {"diagnostics", to_json(rec.diagnostics)}};
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

JacobiOperator<double> load_operator(const std::filesystem::path& path) {
  try {
    return operator_from_json(read_json(path));
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

SpectralData<double> load_spectral(const std::filesystem::path& path) {
  try {
    return spectral_from_json(read_json(path));
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

void write_json(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

std::string format_number(double x) {
  if (std::isnan(x)) return "";
  if (x == 0) return "0";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_kernel_csv(std::ostream& os, const TransformKernel<double>& k) {
  os << "m,n,K\n";
  const Eigen::Index n = k.grid.size();
  for (Eigen::Index m = 1; m <= n; ++m) {
    for (Eigen::Index j = 1; j <= m; ++j) os << m << ',' << j << ',' << format_number(k(m, j)) << '\n';
  }
}

void write_study_csv(std::ostream& os, const RefinementReport<double>& report) {
  os << "N,delta,max_factor2_gap,goursat_residual,cauchy_diff,est_order\n";
  for (const auto& r : report.rows) {
    os << r.n << ',' << format_number(r.delta) << ',';
    if (r.ok) {
      os << format_number(r.factor2_gap) << ',' << format_number(r.goursat) << ',';
    } else {
      os << ",,";
    }
    os << format_number(r.cauchy_diff) << ',' << format_number(r.est_order) << '\n';
  }
}

void write_profile_csv(std::ostream& os, const RefinementReport<double>& report) {
  os << "N,x,V_eff\n";
  for (const auto& r : report.rows) {
    if (!r.ok) continue;
    for (Eigen::Index j = 0; j < report.mesh.size(); ++j) {
      if (std::isnan(r.veff_profile[j])) continue;
      os << r.n << ',' << format_number(report.mesh[j]) << ',' << format_number(r.veff_profile[j]) << '\n';
    }
  }
}

}  // namespace jinv::io
