#include "jinv/commands.hpp"

#include <charconv>
#include <fstream>
#include <iostream>
#include <sstream>

namespace jinv::cli {

namespace fs = std::filesystem;
using io::json;
using io::ParseError;

std::map<std::string, double> default_tolerances() {
  return {{"gl_residual", 1e-10}, {"gl_condition", 1e12},  {"k_cross_check", 1e-8}, {"orthonormality", 1e-6},
          {"leakage", 1e-6},      {"recursion_gap", 1e-5}, {"parseval", 1e-8},      {"roundtrip", 1e-5}};
}

namespace {

long long parse_integer(const std::string& s) {
  long long value = 0;
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, value);
  if (ec != std::errc() || ptr != end) throw ParseError("not an integer: '" + s + "'");
  return value;
}

double parse_double(const std::string& s) {
  try {
    std::size_t used = 0;
    const double value = std::stod(s, &used);
    if (used == s.size()) return value;
  } catch (const std::exception&) {
  }
  throw ParseError("not a number: '" + s + "'");
}

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) parts.push_back(trim(item));
  return parts;
}

Method parse_method(const std::string& s) {
  if (s == "synthesis") return Method::synthesis;
  if (s == "recursion") return Method::recursion;
  if (s == "both") return Method::both;
  throw ParseError("method must be synthesis, recursion or both");
}

Orientation parse_orientation(const std::string& s) {
  if (s == "left") return Orientation::left;
  if (s == "right") return Orientation::right;
  throw ParseError("orientation must be left or right");
}

std::map<Eigen::Index, double> index_map_from_json(const json& j, const char* key) {
  if (!j.is_object()) throw ParseError(std::string("'") + key + "' must be an object of index -> value");
  std::map<Eigen::Index, double> out;
  for (const auto& [k, v] : j.items()) {
    if (!v.is_number()) throw ParseError(std::string("'") + key + "' values must be numbers");
    out[static_cast<Eigen::Index>(parse_integer(k))] = v.get<double>();
  }
  return out;
}

std::string get_string(const json& j, const char* key) {
  if (!j.at(key).is_string()) throw ParseError(std::string("'") + key + "' must be a string");
  return j.at(key).get<std::string>();
}

fs::path require(const std::optional<fs::path>& path, const char* what) {
  if (!path) throw ParseError(std::string("missing '") + what + "'");
  return *path;
}

void prepare_out(const fs::path& out) {
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw std::runtime_error("cannot create " + out.string() + ": " + ec.message());
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

json tolerance_json(const RunConfig& config) {
  return json{{"values", config.tolerances}, {"overridden", config.overridden}};
}

/// Names of violated thresholds.
std::vector<std::string> check_thresholds(const RecoveredSystem<double>& rec, const RunConfig& config) {
  const auto& t = config.tolerances;
  const auto& d = rec.diagnostics;
  const double kmax = rec.kernel.k.cwiseAbs().maxCoeff();
  std::vector<std::string> failed;
  if (!(d.gl_residual <= t.at("gl_residual"))) failed.push_back("gl_residual");
  if (!(d.gl_condition <= t.at("gl_condition"))) failed.push_back("gl_condition");
  if (!(d.k_cross_check <= t.at("k_cross_check") * (1 + kmax))) failed.push_back("k_cross_check");
  if (!(d.orthonormality_defect <= t.at("orthonormality"))) failed.push_back("orthonormality");
  if (rec.synthesis_op && !(d.relative_leakage <= t.at("leakage"))) failed.push_back("leakage");
  if (rec.method == Method::both) {
    if (!rec.recursion_op || !(d.recursion_synthesis_gap <= t.at("recursion_gap"))) failed.push_back("recursion_gap");
  }
  return failed;
}

json threshold_json(const std::vector<std::string>& failed) {
  return json{{"passed", failed.empty()}, {"violations", failed}};
}

int report_violations(const std::string& command, const std::vector<std::string>& failed) {
  if (failed.empty()) return ExitCode::ok;
  std::string names;
  for (const auto& f : failed) names += (names.empty() ? "" : ", ") + f;
  std::cerr << "jinv " << command << ": threshold violated: " << names << '\n';
  return ExitCode::threshold_violation;
}

InversionProblem<double> load_problem(const RunConfig& config, const SpectralData<double>& target) {
  const JacobiOperator<double> reference =
      config.reference_path ? io::load_operator(*config.reference_path) : free_well<double>(target.grid.size());
  if (reference.size() != target.grid.size()) throw ParseError("reference and target sizes differ");
  SpectralData<double> reference_data;
  if (config.reference_data_path) {
    reference_data = io::load_spectral(*config.reference_data_path);
  } else {
    const EigenSystem<double> es = eigensolve(reference);
    reference_data =
        target.orientation == Orientation::left ? extract_spectral_data(es) : extract_right_spectral_data(es);
  }
  if (reference_data.grid != target.grid) throw ParseError("reference data and target data sizes differ");
  if (reference_data.orientation != target.orientation) {
    throw ParseError("reference data and target data orientations differ");
  }
  return InversionProblem<double>{reference, reference_data, target};
}

RecoveredSystem<double> run_inversion(const InversionProblem<double>& p, Method method) {
  if (p.target_data.orientation == Orientation::right) return invert_right_edge(p, method);
  return invert(p, method);
}

void write_inversion(const fs::path& out, const RecoveredSystem<double>& rec, const RunConfig& config,
                     const std::vector<std::string>& failed) {
  io::write_json(out / "operator.json", io::to_json(rec.op));
  std::ostringstream kernel;
  io::write_kernel_csv(kernel, rec.kernel);
  write_text(out / "kernel.csv", kernel.str());
  json report = io::report_json(rec);
  report["tolerances"] = tolerance_json(config);
  report["thresholds"] = threshold_json(failed);
  io::write_json(out / "report.json", report);
}

json error_vector(const Vector<double>& a, const Vector<double>& b) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < a.size(); ++i) arr.push_back(std::abs(a[i] - b[i]));
  return arr;
}

}  // namespace

std::vector<Eigen::Index> parse_sizes(const std::string& csv) {
  std::vector<Eigen::Index> sizes;
  for (const auto& part : split(csv, ',')) {
    if (part.empty()) throw ParseError("empty entry in sizes");
    sizes.push_back(static_cast<Eigen::Index>(parse_integer(part)));
  }
  return sizes;
}

std::map<Eigen::Index, double> parse_index_map(const std::string& text) {
  std::map<Eigen::Index, double> out;
  if (trim(text).empty()) return out;
  for (const auto& part : split(text, ',')) {
    const auto eq = part.find('=');
    if (eq == std::string::npos) throw ParseError("expected index=value, got '" + part + "'");
    out[static_cast<Eigen::Index>(parse_integer(trim(part.substr(0, eq))))] = parse_double(trim(part.substr(eq + 1)));
  }
  return out;
}

RunConfig load_config(const std::string& command, const std::optional<fs::path>& config_path,
                      const Overrides& o) {
  RunConfig c;
  c.command = command;
  fs::path base;
  json j = json::object();
  if (config_path) {
    j = io::read_json(*config_path);
    if (!j.is_object()) throw ParseError("config must hold a JSON object");
    base = config_path->parent_path();
  }
  auto path_key = [&](const char* key) -> std::optional<fs::path> {
    if (!j.contains(key)) return std::nullopt;
    return base / get_string(j, key);
  };
  try {
    c.operator_path = path_key("operator");
    c.reference_path = path_key("reference");
    c.reference_data_path = path_key("reference_data");
    c.target_data_path = path_key("target_data");
    if (j.contains("out")) c.out = base / get_string(j, "out");
    if (j.contains("orientation")) c.orientation = parse_orientation(get_string(j, "orientation"));
    if (j.contains("method")) c.method = parse_method(get_string(j, "method"));
    if (j.contains("level_shifts")) c.perturbation.level_shifts = index_map_from_json(j["level_shifts"], "level_shifts");
    if (j.contains("weight_factors")) {
      c.perturbation.weight_factors = index_map_from_json(j["weight_factors"], "weight_factors");
    }
    if (j.contains("sizes")) {
      if (!j["sizes"].is_array()) throw ParseError("'sizes' must be an array");
      for (const auto& s : j["sizes"]) {
        if (!s.is_number_integer()) throw ParseError("'sizes' entries must be integers");
        c.sizes.push_back(static_cast<Eigen::Index>(s.get<long long>()));
      }
    }
    auto set_tolerance = [&](const std::string& name, double value) {
      if (!c.tolerances.contains(name)) throw ParseError("unknown tolerance '" + name + "'");
      if (!(value > 0)) throw ParseError("tolerance '" + name + "' must be positive");
      c.tolerances[name] = value;
      std::erase(c.overridden, name);
      c.overridden.push_back(name);
    };
    if (j.contains("tolerances")) {
      if (!j["tolerances"].is_object()) throw ParseError("'tolerances' must be an object");
      for (const auto& [name, value] : j["tolerances"].items()) {
        if (!value.is_number()) throw ParseError("tolerance '" + name + "' must be a number");
        set_tolerance(name, value.get<double>());
      }
    }
    if (j.contains("tol")) {
      if (!j["tol"].is_number()) throw ParseError("'tol' must be a number");
      set_tolerance("roundtrip", j["tol"].get<double>());
    }

    if (o.operator_path) c.operator_path = *o.operator_path;
    if (o.reference_path) c.reference_path = *o.reference_path;
    if (o.reference_data_path) c.reference_data_path = *o.reference_data_path;
    if (o.target_data_path) c.target_data_path = *o.target_data_path;
    if (o.out) c.out = *o.out;
    if (o.orientation) c.orientation = parse_orientation(*o.orientation);
    if (o.method) c.method = parse_method(*o.method);
    if (o.sizes) c.sizes = parse_sizes(*o.sizes);
    if (o.level_shifts) c.perturbation.level_shifts = parse_index_map(*o.level_shifts);
    if (o.weight_factors) c.perturbation.weight_factors = parse_index_map(*o.weight_factors);
    if (o.tol) set_tolerance("roundtrip", *o.tol);
  } catch (const json::exception& e) {
    throw ParseError(std::string("config: ") + e.what());
  }
  return c;
}

int cmd_forward(const RunConfig& config) {
  const JacobiOperator<double> op = io::load_operator(require(config.operator_path, "operator"));
  const EigenSystem<double> es = eigensolve(op);
  const SpectralData<double> data =
      config.orientation == Orientation::left ? extract_spectral_data(es) : extract_right_spectral_data(es);
  const double parseval = parseval_defect(es);
  const double constraint = weight_constraint_defect(data);
  const bool passed = parseval <= config.tolerances.at("parseval");

  prepare_out(config.out);
  io::write_json(config.out / "spectral.json", io::to_json(data));
  io::write_json(config.out / "parseval.json",
                 json{{"parseval_defect", parseval},
                      {"weight_constraint_defect", constraint},
                      {"tolerances", tolerance_json(config)},
                      {"thresholds", threshold_json(passed ? std::vector<std::string>{}
                                                           : std::vector<std::string>{"parseval"})}});
  return passed ? ExitCode::ok : report_violations("forward", {"parseval"});
}

int cmd_invert(const RunConfig& config) {
  SpectralData<double> target;
  if (config.target_data_path) {
    target = io::load_spectral(*config.target_data_path);
  } else {
    // Target built by perturbing the reference data.
    SpectralData<double> base;
    if (config.reference_data_path) {
      base = io::load_spectral(*config.reference_data_path);
    } else if (config.reference_path) {
      const EigenSystem<double> es = eigensolve(io::load_operator(*config.reference_path));
      base = config.orientation == Orientation::left ? extract_spectral_data(es) : extract_right_spectral_data(es);
    } else {
      throw ParseError("missing 'target_data'");
    }
    try {
      target = perturb(base, config.perturbation);
    } catch (const Error& e) {
      throw ParseError(e.what());
    }
  }
  const InversionProblem<double> p = load_problem(config, target);
  const RecoveredSystem<double> rec = run_inversion(p, config.method);
  const auto failed = check_thresholds(rec, config);
  prepare_out(config.out);
  write_inversion(config.out, rec, config, failed);
  return report_violations("invert", failed);
}

int cmd_roundtrip(const RunConfig& config) {
  const JacobiOperator<double> target_op = io::load_operator(require(config.operator_path, "operator"));
  const JacobiOperator<double> reference =
      config.reference_path ? io::load_operator(*config.reference_path) : free_well<double>(target_op.size());
  if (reference.size() != target_op.size()) throw ParseError("reference and target sizes differ");
  if (reference.u_edge != target_op.u_edge) {
    std::cerr << "jinv roundtrip: u_edge differs between target and reference; it is pinned to the reference value\n";
  }
  const EigenSystem<double> es = eigensolve(target_op);
  const EigenSystem<double> ref_es = eigensolve(reference);
  const bool left = config.orientation == Orientation::left;
  const SpectralData<double> target = left ? extract_spectral_data(es) : extract_right_spectral_data(es);
  const SpectralData<double> ref_data = left ? extract_spectral_data(ref_es) : extract_right_spectral_data(ref_es);
  const InversionProblem<double> p{reference, ref_data, target};
  const RecoveredSystem<double> rec = run_inversion(p, config.method);
  auto failed = check_thresholds(rec, config);

  json comparison = json::object();
  double worst = 0;
  auto compare = [&](const char* name, const JacobiOperator<double>& op) {
    const double gap = max_coefficient_gap(op, target_op);
    worst = std::max(worst, gap);
    comparison[name] = json{{"v_error", error_vector(op.v, target_op.v)},
                            {"u_error", error_vector(op.u, target_op.u)},
                            {"max_error", gap}};
  };
  if (rec.synthesis_op) compare("synthesis", *rec.synthesis_op);
  if (rec.recursion_op) compare("recursion", *rec.recursion_op);
  if (rec.method == Method::both && !rec.recursion_op) worst = std::numeric_limits<double>::infinity();
  const bool within = worst <= config.tolerances.at("roundtrip");
  if (!within) failed.push_back("roundtrip");

  prepare_out(config.out);
  io::write_json(config.out / "spectral.json", io::to_json(target));
  write_inversion(config.out, rec, config, failed);
  io::write_json(config.out / "comparison.json",
                 json{{"methods", comparison},
                      {"max_error", worst},
                      {"tolerance", config.tolerances.at("roundtrip")},
                      {"passed", within}});
  return report_violations("roundtrip", failed);
}

int cmd_sweep(const RunConfig& config) {
  RefinementStudy<double> study;
  study.sizes = config.sizes.empty() ? std::vector<Eigen::Index>{40, 80, 160} : config.sizes;
  study.perturbation = config.perturbation;
  study.method = config.method;
  try {
    validate(study);
  } catch (const Error& e) {
    throw ParseError(e.what());
  }
  const RefinementReport<double> report = run_refinement_study(study);

  prepare_out(config.out);
  std::ostringstream table, profiles;
  io::write_study_csv(table, report);
  io::write_profile_csv(profiles, report);
  write_text(config.out / "study.csv", table.str());
  write_text(config.out / "veff.csv", profiles.str());

  bool numerical = false;
  for (const auto& row : report.rows) {
    if (!row.ok) {
      std::cerr << "jinv sweep: N = " << row.n << ": " << row.error << '\n';
      numerical = true;
    }
  }
  if (numerical) return ExitCode::numerical_failure;
  if (report.rows.size() < 2) {
    std::cerr << "jinv sweep: warning: a single size gives no Cauchy differences or order estimates\n";
    return ExitCode::ok;
  }
  if (!report.monotone()) {
    std::cerr << "jinv sweep: factor-2 gap or Goursat residual does not decrease with N\n";
    return ExitCode::threshold_violation;
  }
  return ExitCode::ok;
}

int run(const RunConfig& config) {
  try {
    if (config.command == "forward") return cmd_forward(config);
    if (config.command == "invert") return cmd_invert(config);
    if (config.command == "roundtrip") return cmd_roundtrip(config);
    if (config.command == "sweep") return cmd_sweep(config);
    std::cerr << "jinv: unknown command '" << config.command << "'\n";
    return ExitCode::parse_error;
  } catch (const ParseError& e) {
    std::cerr << "jinv " << config.command << ": " << e.what() << '\n';
    return ExitCode::parse_error;
  } catch (const Error& e) {
    std::cerr << "jinv " << config.command << ": " << e.what() << '\n';
    switch (e.kind()) {
      case ErrorKind::invalid_input: return ExitCode::parse_error;
      case ErrorKind::noninvertible_data: return ExitCode::noninvertible;
      case ErrorKind::non_tridiagonal_synthesis: return ExitCode::threshold_violation;
      default: return ExitCode::numerical_failure;
    }
  } catch (const std::exception& e) {
    std::cerr << "jinv " << config.command << ": " << e.what() << '\n';
    return ExitCode::numerical_failure;
  }
}

}  // namespace jinv::cli
