#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "jinv/recovery.hpp"

namespace jinv {

/// Local potential the three diagonals merge into: V(x_m) + 2u(x_m), with
/// u(x_N) = u_edge at the last node.
template <typename Scalar>
Vector<Scalar> effective_potential(const JacobiOperator<Scalar>& op) {
  const Eigen::Index n = op.size();
  Vector<Scalar> out = op.v;
  if (n > 1) out.head(n - 1) += Scalar(2) * op.u;
  out[n - 1] += Scalar(2) * op.u_edge;
  return out;
}

/// 2 (K(x_{m+1},x_{m+1}) - K(x_m,x_m)) / D for m = 1..N-1; the discrete
/// form of 2 dK(x,x)/dx, sitting at x_{m+1}.
template <typename Scalar>
Vector<Scalar> diagonal_derivative(const TransformKernel<Scalar>& k) {
  const Eigen::Index n = k.grid.size();
  if (n < 2) return Vector<Scalar>(0);
  const Vector<Scalar> diag = k.k.diagonal();
  return (Scalar(2) / k.grid.step()) * (diag.tail(n - 1) - diag.head(n - 1));
}

/// Diagonal of K extrapolated linearly to x = 0; the continuum kernel has
/// K(0,0) = 0.
template <typename Scalar>
Scalar diagonal_anchor(const TransformKernel<Scalar>& k) {
  if (k.grid.size() < 2) return k.k(0, 0);
  return Scalar(2) * k.k(0, 0) - k.k(1, 1);
}

inline constexpr Eigen::Index kMinGoursatSize = 6;

/// Max over lattice points 2 <= n <= m-2, m <= N-1 of
///   |K_xx - K_yy - (V_eff(x_m) - V°_eff(x_n)) K(x_m,x_n)| / (1 + max|K|)
/// with centered second differences. The stencil stays strictly below the
/// diagonal, whose values are only a convention.
template <typename Scalar>
Scalar goursat_residual(const TransformKernel<Scalar>& k, const JacobiOperator<Scalar>& recovered,
                        const JacobiOperator<Scalar>& ref) {
  const Eigen::Index n = k.grid.size();
  if (n < kMinGoursatSize) {
    throw Error(ErrorKind::invalid_input, "Goursat residual needs N >= 6");
  }
  const Scalar inv_d2 = k.grid.inv_step2();
  const Vector<Scalar> veff = effective_potential(recovered);
  const Vector<Scalar> veff_ref = effective_potential(ref);
  auto K = [&](Eigen::Index m, Eigen::Index j) { return k.k(m - 1, j - 1); };
  Scalar worst = 0;
  for (Eigen::Index m = 4; m <= n - 1; ++m) {
    for (Eigen::Index j = 2; j <= m - 2; ++j) {
      const Scalar kxx = (K(m + 1, j) - Scalar(2) * K(m, j) + K(m - 1, j)) * inv_d2;
      const Scalar kyy = (K(m, j + 1) - Scalar(2) * K(m, j) + K(m, j - 1)) * inv_d2;
      const Scalar r = kxx - kyy - (veff[m - 1] - veff_ref[j - 1]) * K(m, j);
      worst = std::max(worst, std::abs(r));
    }
  }
  const Matrix<Scalar> lower = k.k.template triangularView<Eigen::StrictlyLower>();
  return worst / (Scalar(1) + lower.cwiseAbs().maxCoeff());
}

/// Inversion from the right wall. Both data sets carry gamma weights; the
/// problem is reflected, inverted from the left and reflected back.
///
/// The returned kernel and its diagnostics stay in reflected coordinates
/// (row/column i is node N+1-i). Solutions are mirrored back, so they satisfy
/// f(x_{N+1}) = 0, f(x_N) = D. `diagnostics.mirror_gap` compares the result
/// with a left inversion of the recovered operator's own left data.
template <typename Scalar>
RecoveredSystem<Scalar> invert_right_edge(const InversionProblem<Scalar>& p, Method method = Method::both) {
  if (p.target_data.orientation != Orientation::right || p.reference_data.orientation != Orientation::right) {
    throw Error(ErrorKind::invalid_input, "right-edge inversion needs right-oriented spectral data");
  }
  InversionProblem<Scalar> mirrored{reflect(p.reference), p.reference_data, p.target_data};
  mirrored.reference_data.orientation = Orientation::left;
  mirrored.target_data.orientation = Orientation::left;

  RecoveredSystem<Scalar> out = invert(mirrored, method);
  const Scalar edge = p.reference.u_edge;
  out.op = reflect(out.op, edge);
  if (out.synthesis_op) out.synthesis_op = reflect(*out.synthesis_op, edge);
  if (out.recursion_op) out.recursion_op = reflect(*out.recursion_op, edge);
  out.solutions.values = out.solutions.values.colwise().reverse().eval();
  return out;
}

/// max coefficient gap between a right-edge recovery and the left recovery
/// of the same operator's left spectral data from `reference`.
template <typename Scalar>
Scalar mirror_gap(const RecoveredSystem<Scalar>& right, const JacobiOperator<Scalar>& reference) {
  const SpectralData<Scalar> left = extract_spectral_data(eigensolve(right.op));
  const RecoveredSystem<Scalar> again = invert(make_problem(reference, left), Method::synthesis);
  return max_coefficient_gap(right.op, again.op);
}

/// Piecewise-linear interpolation of (xs, ys) at x, constant beyond the ends.
template <typename Scalar>
Scalar interpolate(const Vector<Scalar>& xs, const Vector<Scalar>& ys, Scalar x) {
  const Eigen::Index n = xs.size();
  if (x <= xs[0]) return ys[0];
  if (x >= xs[n - 1]) return ys[n - 1];
  const auto* begin = xs.data();
  const Eigen::Index hi = std::upper_bound(begin, begin + n, x) - begin;
  const Eigen::Index lo = hi - 1;
  const Scalar t = (x - xs[lo]) / (xs[hi] - xs[lo]);
  return ys[lo] + t * (ys[hi] - ys[lo]);
}

/// Comparison mesh: `points` equally spaced interior points of [0, pi].
template <typename Scalar>
Vector<Scalar> comparison_mesh(Eigen::Index points) {
  Vector<Scalar> x(points);
  for (Eigen::Index j = 0; j < points; ++j) {
    x[j] = std::numbers::pi_v<Scalar> * Scalar(j + 1) / Scalar(points + 1);
  }
  return x;
}

/// Same physical perturbation applied on a family of free wells.
template <typename Scalar = double>
struct RefinementStudy {
  std::vector<Eigen::Index> sizes;
  Perturbation<Scalar> perturbation;
  Eigen::Index mesh_points = 32;
  /// Profiles come from the synthesized operator unless only recursion runs.
  Method method = Method::synthesis;
};

inline constexpr Eigen::Index kMinStudySize = 8;

template <typename Scalar = double>
struct RefinementResult {
  Eigen::Index n = 0;
  Scalar delta = 0;
  bool ok = false;
  std::string error;
  Vector<Scalar> veff_profile;   ///< recovered V_eff on the comparison mesh, NaN where not covered
  Vector<Scalar> change_profile; ///< V_eff - V°_eff on the mesh
  Vector<Scalar> derivative_profile;
  Scalar factor2_gap = 0;
  Scalar goursat = 0;
  Scalar anchor = 0;
  Scalar cauchy_diff = std::numeric_limits<Scalar>::quiet_NaN();
  Scalar est_order = std::numeric_limits<Scalar>::quiet_NaN();
};

/// Study values below this are rounding noise; monotonicity ignores them.
inline constexpr double kStudyNoiseFloor = 1e-6;

template <typename Scalar = double>
struct RefinementReport {
  Vector<Scalar> mesh;
  std::vector<RefinementResult<Scalar>> rows;

  /// Factor-2 gap and Goursat residual never increase with N (above the
  /// noise floor).
  bool monotone() const {
    auto grows = [](Scalar prev, Scalar next) { return next > std::max(prev, Scalar(kStudyNoiseFloor)); };
    for (std::size_t i = 1; i < rows.size(); ++i) {
      if (!rows[i].ok || !rows[i - 1].ok) return false;
      if (grows(rows[i - 1].factor2_gap, rows[i].factor2_gap)) return false;
      if (grows(rows[i - 1].goursat, rows[i].goursat)) return false;
    }
    return std::all_of(rows.begin(), rows.end(), [](const auto& r) { return r.ok; });
  }
};

template <typename Scalar>
void validate(const RefinementStudy<Scalar>& study) {
  if (study.sizes.empty()) throw Error(ErrorKind::invalid_input, "study needs at least one size");
  for (std::size_t i = 0; i < study.sizes.size(); ++i) {
    if (study.sizes[i] < kMinStudySize) {
      throw Error(ErrorKind::invalid_input, "study sizes must be >= 8");
    }
    if (i > 0 && study.sizes[i] <= study.sizes[i - 1]) {
      throw Error(ErrorKind::invalid_input, "study sizes must be strictly increasing");
    }
  }
  if (study.mesh_points < 2) throw Error(ErrorKind::invalid_input, "comparison mesh needs >= 2 points");
  const Eigen::Index smallest = study.sizes.front();
  auto check_index = [&](Eigen::Index index) {
    if (index < 1 || index > smallest / 4) {
      throw Error(ErrorKind::invalid_input,
                  "only the lowest floor(N/4) modes may be perturbed; index " + std::to_string(index) +
                      " is out of range for N = " + std::to_string(smallest),
                  static_cast<long>(index));
    }
  };
  for (const auto& [index, shift] : study.perturbation.level_shifts) check_index(index);
  for (const auto& [index, factor] : study.perturbation.weight_factors) check_index(index);
}

namespace detail {

/// Samples of (xs, ys) on `mesh`; NaN outside [xs.front(), xs.back()] so
/// that no value is extrapolated.
template <typename Scalar>
Vector<Scalar> resample(const Vector<Scalar>& xs, const Vector<Scalar>& ys, const Vector<Scalar>& mesh) {
  Vector<Scalar> out(mesh.size());
  for (Eigen::Index j = 0; j < mesh.size(); ++j) {
    const bool covered = mesh[j] >= xs[0] && mesh[j] <= xs[xs.size() - 1];
    out[j] = covered ? interpolate(xs, ys, mesh[j]) : std::numeric_limits<Scalar>::quiet_NaN();
  }
  return out;
}

/// max |a - b| over entries where both are defined; NaN if there are none.
template <typename Scalar>
Scalar max_gap(const Vector<Scalar>& a, const Vector<Scalar>& b) {
  Scalar worst = std::numeric_limits<Scalar>::quiet_NaN();
  for (Eigen::Index j = 0; j < a.size(); ++j) {
    if (std::isnan(a[j]) || std::isnan(b[j])) continue;
    const Scalar gap = std::abs(a[j] - b[j]);
    worst = std::isnan(worst) ? gap : std::max(worst, gap);
  }
  return worst;
}

template <typename Scalar>
RefinementResult<Scalar> run_single_size(Eigen::Index n, const RefinementStudy<Scalar>& study,
                                         const Vector<Scalar>& mesh) {
  RefinementResult<Scalar> row;
  row.n = n;
  const JacobiOperator<Scalar> ref = free_well<Scalar>(n);
  row.delta = ref.grid.step();
  try {
    const SpectralData<Scalar> ref_data = extract_spectral_data(eigensolve(ref));
    for (const auto& [index, shift] : study.perturbation.level_shifts) {
      Vector<Scalar> shifted = ref_data.levels;
      shifted[index - 1] += shift;
      for (Eigen::Index i = 1; i < n; ++i) {
        if (!(shifted[i] > shifted[i - 1])) {
          throw Error(ErrorKind::invalid_input, "perturbation reorders the levels at N = " + std::to_string(n));
        }
      }
    }
    const SpectralData<Scalar> target = perturb(ref_data, study.perturbation);
    const RecoveredSystem<Scalar> rec = invert(InversionProblem<Scalar>{ref, ref_data, target}, study.method);

    // Node N carries u_edge = u°_edge, which is pinned rather than
    // recovered, so profiles use nodes 1..N-1. The last derivative sample
    // is zero by the diagonal convention and is dropped too.
    const Vector<Scalar> x = ref.grid.interior_nodes();
    const Vector<Scalar> veff = effective_potential(rec.op);
    const Vector<Scalar> change = veff - effective_potential(ref);
    const Vector<Scalar> deriv = diagonal_derivative(rec.kernel);
    row.veff_profile = resample<Scalar>(x.head(n - 1), veff.head(n - 1), mesh);
    row.change_profile = resample<Scalar>(x.head(n - 1), change.head(n - 1), mesh);
    row.derivative_profile = resample<Scalar>(x.segment(1, n - 2), deriv.head(n - 2), mesh);
    row.factor2_gap = max_gap(row.change_profile, row.derivative_profile);
    row.goursat = goursat_residual(rec.kernel, rec.op, ref);
    row.anchor = diagonal_anchor(rec.kernel);
    row.ok = true;
  } catch (const Error& e) {
    row.error = e.what();
  }
  return row;
}

}  // namespace detail

/// Runs every size (failures are recorded per row), then fills Cauchy
/// differences between successive V_eff profiles and the empirical order
/// log(c_{i-1}/c_i) / log(D_{i-1}/D_i). Profiles are compared only at mesh
/// points both lattices cover.
template <typename Scalar>
RefinementReport<Scalar> run_refinement_study(const RefinementStudy<Scalar>& study) {
  validate(study);
  RefinementReport<Scalar> report;
  report.mesh = comparison_mesh<Scalar>(study.mesh_points);
  for (Eigen::Index n : study.sizes) report.rows.push_back(detail::run_single_size(n, study, report.mesh));

  for (std::size_t i = 1; i < report.rows.size(); ++i) {
    auto& row = report.rows[i];
    const auto& prev = report.rows[i - 1];
    if (!row.ok || !prev.ok) continue;
    row.cauchy_diff = detail::max_gap(row.veff_profile, prev.veff_profile);
    if (i >= 2 && report.rows[i - 2].ok && prev.cauchy_diff > 0 && row.cauchy_diff > 0) {
      row.est_order = std::log(prev.cauchy_diff / row.cauchy_diff) / std::log(prev.delta / row.delta);
    }
  }
  return report;
}

}  // namespace jinv
