#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "jinv/io.hpp"

namespace jinv::cli {

enum ExitCode : int {
  ok = 0,
  parse_error = 2,
  numerical_failure = 3,
  noninvertible = 4,
  threshold_violation = 5,
};

/// Default acceptance thresholds. Every entry can be overridden through
/// the "tolerances" object of the config; `tol` sets `roundtrip`.
///
///   gl_residual        1e-10  relative residual of each GL row solve
///   gl_condition       1e12   condition estimate of the GL matrix
///   k_cross_check      1e-8   identity check on K, scaled by 1 + max|K|
///   orthonormality     1e-6   weighted orthonormality of recovered solutions
///   leakage            1e-6   off-band synthesis entries, relative to |H|
///   recursion_gap      1e-5   synthesis vs recursion coefficients
///   parseval           1e-8   completeness of the forward eigensystem
///   roundtrip          1e-5   coefficient error in `roundtrip`
std::map<std::string, double> default_tolerances();

struct RunConfig {
  std::string command;
  std::optional<std::filesystem::path> operator_path;
  std::optional<std::filesystem::path> reference_path;
  std::optional<std::filesystem::path> reference_data_path;
  std::optional<std::filesystem::path> target_data_path;
  Orientation orientation = Orientation::left;
  Perturbation<double> perturbation;
  std::vector<Eigen::Index> sizes;
  std::filesystem::path out = ".";
  Method method = Method::both;
  std::map<std::string, double> tolerances = default_tolerances();
  std::vector<std::string> overridden;
};

/// Flag values that take precedence over the config file; unset entries
/// leave the file's value alone.
struct Overrides {
  std::optional<std::string> operator_path, reference_path, reference_data_path, target_data_path;
  std::optional<std::string> orientation, out, method, sizes, level_shifts, weight_factors;
  std::optional<double> tol;
};

/// Config keys: operator, reference, reference_data, target_data,
/// orientation, level_shifts, weight_factors, sizes, out, method, tol,
/// tolerances. Relative paths resolve against the config file's directory.
/// Throws io::ParseError.
RunConfig load_config(const std::string& command, const std::optional<std::filesystem::path>& config_path,
                      const Overrides& overrides);

std::vector<Eigen::Index> parse_sizes(const std::string& csv);
/// "1=1.0,3=-0.5" into an index map.
std::map<Eigen::Index, double> parse_index_map(const std::string& text);

int cmd_forward(const RunConfig& config);
int cmd_invert(const RunConfig& config);
int cmd_roundtrip(const RunConfig& config);
int cmd_sweep(const RunConfig& config);

/// Dispatches on config.command and maps exceptions to exit codes.
int run(const RunConfig& config);

}  // namespace jinv::cli
