#pragma once

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "jinv/continuum.hpp"

namespace jinv::io {

/// Malformed or invariant-violating input file.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using json = nlohmann::json;

/// {"n", "v", "u", "u_edge"}; u has N-1 entries.
JacobiOperator<double> operator_from_json(const json& j);
json to_json(const JacobiOperator<double>& op);

/// {"n", "delta", "levels", "weights", "orientation"}.
SpectralData<double> spectral_from_json(const json& j);
json to_json(const SpectralData<double>& data);

json to_json(const Diagnostics<double>& d);

/// Operator, diagnostics and the methods that produced it. Methods that
/// were not run are absent.
json report_json(const RecoveredSystem<double>& rec);

json read_json(const std::filesystem::path& path);
JacobiOperator<double> load_operator(const std::filesystem::path& path);
SpectralData<double> load_spectral(const std::filesystem::path& path);

/// Pretty-printed, sorted keys, trailing newline.
void write_json(const std::filesystem::path& path, const json& j);

/// %.17g, or an empty field for NaN.
std::string format_number(double x);

/// Lines "m,n,K" for 1 <= n <= m <= N, header included.
void write_kernel_csv(std::ostream& os, const TransformKernel<double>& k);

/// N,delta,max_factor2_gap,goursat_residual,cauchy_diff,est_order.
void write_study_csv(std::ostream& os, const RefinementReport<double>& report);

/// N,x,V_eff on the comparison mesh, one block per size.
void write_profile_csv(std::ostream& os, const RefinementReport<double>& report);

}  // namespace jinv::io
