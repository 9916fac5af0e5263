#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "jinv/grid.hpp"
#include "jinv/tridiagonal_eigen.hpp"

namespace jinv {

/// Which wall the weights are measured at: c_nu = Psi_nu'(0) for `left`,
/// gamma_nu = |Psi_nu'(pi)| for `right`.
enum class Orientation { left, right };

inline const char* to_string(Orientation o) { return o == Orientation::left ? "left" : "right"; }

/// All N eigenpairs of H. Column nu of `vectors` is Psi_nu over x_1..x_N,
/// normalized so that D * sum_n Psi_nu(x_n)^2 = 1 and signed so Psi_nu(x_1) > 0.
template <typename Scalar = double>
struct EigenSystem {
  Grid<Scalar> grid;
  Vector<Scalar> levels;
  Matrix<Scalar> vectors;
};

/// Eigenvalues with their spectral weight factors (norming constants).
template <typename Scalar = double>
struct SpectralData {
  Grid<Scalar> grid;
  Vector<Scalar> levels;
  Vector<Scalar> weights;
  Orientation orientation = Orientation::left;

  Eigen::Index size() const noexcept { return levels.size(); }
};

/// Regular solutions phi(x_n, E) at several energies. Column j of `values`
/// holds phi(x_0..x_{N+1}, energies[j]); row n is node x_n.
template <typename Scalar = double>
struct RegularSolutionTable {
  Vector<Scalar> energies;
  Matrix<Scalar> values;

  /// Rows x_1..x_N only.
  auto interior() const { return values.middleRows(1, values.rows() - 2); }
};

inline constexpr double kWeightConstraintTolerance = 1e-8;
inline constexpr double kDegenerateLevelTolerance = 1e-12;
inline constexpr double kEigenResidualTolerance = 1e-10;

template <typename Scalar>
Scalar weight_constraint_defect(const SpectralData<Scalar>& data) {
  const Scalar d = data.grid.step();
  return std::abs(d * d * d * data.weights.squaredNorm() - Scalar(1));
}

template <typename Scalar>
void validate(const SpectralData<Scalar>& data) {
  const Eigen::Index n = data.grid.size();
  if (data.levels.size() != n || data.weights.size() != n) {
    throw Error(ErrorKind::invalid_input, "spectral data needs exactly N levels and N weights");
  }
  if (!data.levels.allFinite() || !data.weights.allFinite()) {
    throw Error(ErrorKind::invalid_input, "spectral data must be finite");
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(data.weights[i] > Scalar(0))) {
      throw Error(ErrorKind::invalid_input, "weight " + std::to_string(i + 1) + " is not positive",
                  static_cast<long>(i + 1));
    }
    if (i > 0 && !(data.levels[i] > data.levels[i - 1])) {
      throw Error(ErrorKind::invalid_input, "levels are not strictly ascending at " + std::to_string(i + 1),
                  static_cast<long>(i + 1));
    }
  }
  if (weight_constraint_defect(data) > Scalar(kWeightConstraintTolerance)) {
    throw Error(ErrorKind::invalid_input, "weights violate D^3 * sum c^2 = 1");
  }
}

/// Diagonalizes H by Sturm bisection and inverse iteration.
template <typename Scalar>
EigenSystem<Scalar> eigensolve(const JacobiOperator<Scalar>& op) {
  validate(op);
  const Eigen::Index n = op.size();
  const Vector<Scalar> diag = main_diagonal(op);
  const Vector<Scalar> off = n > 1 ? off_diagonal(op) : Vector<Scalar>(0);
  TridiagonalEigen<Scalar> te = tridiagonal_eigen(diag, off);

  for (Eigen::Index k = 1; k < n; ++k) {
    const Scalar scale = std::max(std::abs(te.values[k]), std::abs(te.values[k - 1]));
    if (te.values[k] - te.values[k - 1] < Scalar(kDegenerateLevelTolerance) * scale) {
      throw Error(ErrorKind::degenerate_spectrum,
                  "levels " + std::to_string(k) + " and " + std::to_string(k + 1) + " coincide",
                  static_cast<long>(k + 1));
    }
  }

  const Matrix<Scalar> h = assemble(op);
  const Scalar h_norm = h.cwiseAbs().rowwise().sum().maxCoeff();
  for (Eigen::Index k = 0; k < n; ++k) {
    const Scalar residual = (h * te.vectors.col(k) - te.values[k] * te.vectors.col(k)).norm();
    if (residual > Scalar(kEigenResidualTolerance) * h_norm) {
      throw Error(ErrorKind::convergence_failure,
                  "eigenpair " + std::to_string(k + 1) + " residual too large", static_cast<long>(k + 1));
    }
    if (te.vectors(0, k) < 0) te.vectors.col(k) *= Scalar(-1);
  }

  EigenSystem<Scalar> es{op.grid, std::move(te.values), std::move(te.vectors)};
  es.vectors /= std::sqrt(op.grid.step());
  return es;
}

/// phi(x_0..x_{N+1}, E) with phi(x_0) = 0, phi(x_1) = D, run through the
/// three-term recurrence of row n. u(x_0) is taken as 0 and u(x_N) as u_edge.
template <typename Scalar>
Vector<Scalar> regular_solution(const JacobiOperator<Scalar>& op, Scalar energy) {
  const Eigen::Index n = op.size();
  const Scalar d = op.grid.step();
  const Scalar k = op.grid.inv_step2();
  Vector<Scalar> phi(n + 2);
  phi[0] = Scalar(0);
  phi[1] = d;
  for (Eigen::Index m = 1; m <= n; ++m) {
    const Scalar u_prev = m >= 2 ? op.u[m - 2] : Scalar(0);
    const Scalar u_here = m <= n - 1 ? op.u[m - 1] : op.u_edge;
    const Scalar denom = k - u_here;
    if (std::abs(denom) * d * d < Scalar(kMinRecurrenceDenominator)) {
      throw Error(ErrorKind::singular_recurrence, "1/D^2 - u vanishes at node " + std::to_string(m),
                  static_cast<long>(m));
    }
    phi[m + 1] = ((Scalar(2) * k + op.v[m - 1] - energy) * phi[m] + (u_prev - k) * phi[m - 1]) / denom;
  }
  return phi;
}

template <typename Scalar>
RegularSolutionTable<Scalar> regular_solutions(const JacobiOperator<Scalar>& op,
                                               const Vector<Scalar>& energies) {
  RegularSolutionTable<Scalar> table{energies, Matrix<Scalar>(op.size() + 2, energies.size())};
  for (Eigen::Index j = 0; j < energies.size(); ++j) {
    table.values.col(j) = regular_solution(op, energies[j]);
  }
  return table;
}

/// c_nu = Psi_nu(x_1) / D, since phi_nu(x_1) = D.
template <typename Scalar>
SpectralData<Scalar> extract_spectral_data(const EigenSystem<Scalar>& es) {
  SpectralData<Scalar> data{es.grid, es.levels, es.vectors.row(0).transpose() / es.grid.step(),
                            Orientation::left};
  if (weight_constraint_defect(data) > Scalar(kWeightConstraintTolerance) || (data.weights.array() <= 0).any()) {
    throw Error(ErrorKind::inconsistent_eigensystem, "eigenvectors do not satisfy D^3 * sum c^2 = 1");
  }
  return data;
}

/// gamma_nu = |Psi_nu(x_N)| / D, the weights seen from the right wall.
template <typename Scalar>
SpectralData<Scalar> extract_right_spectral_data(const EigenSystem<Scalar>& es) {
  const Eigen::Index n = es.grid.size();
  SpectralData<Scalar> data{es.grid, es.levels,
                            es.vectors.row(n - 1).transpose().cwiseAbs() / es.grid.step(),
                            Orientation::right};
  if (weight_constraint_defect(data) > Scalar(kWeightConstraintTolerance) || (data.weights.array() <= 0).any()) {
    throw Error(ErrorKind::inconsistent_eigensystem, "eigenvectors do not satisfy D^3 * sum gamma^2 = 1");
  }
  return data;
}

/// max_{m,n} |D * sum_nu Psi_nu(x_m) Psi_nu(x_n) - delta_mn|.
template <typename Scalar>
Scalar parseval_defect(const EigenSystem<Scalar>& es) {
  const Eigen::Index n = es.grid.size();
  const Matrix<Scalar> gram = es.grid.step() * es.vectors * es.vectors.transpose();
  return (gram - Matrix<Scalar>::Identity(n, n)).cwiseAbs().maxCoeff();
}

/// max_{m,n} |D * sum_nu c_nu^2 phi(x_m, E_nu) phi(x_n, E_nu) - delta_mn| for
/// solutions tabulated at the levels of `data`.
template <typename Scalar>
Scalar weighted_orthogonality_defect(const RegularSolutionTable<Scalar>& table,
                                     const SpectralData<Scalar>& data) {
  const Eigen::Index n = data.grid.size();
  const Matrix<Scalar> phi = table.interior();
  const Matrix<Scalar> gram =
      data.grid.step() * phi * data.weights.array().square().matrix().asDiagonal() * phi.transpose();
  return (gram - Matrix<Scalar>::Identity(n, n)).cwiseAbs().maxCoeff();
}

/// Level shifts and weight rescalings keyed by 1-based level index.
template <typename Scalar = double>
struct Perturbation {
  std::map<Eigen::Index, Scalar> level_shifts;
  std::map<Eigen::Index, Scalar> weight_factors;

  bool empty() const noexcept { return level_shifts.empty() && weight_factors.empty(); }
};

/// Applies `p` to `data`. Weights not named in `p` are scaled by one common
/// positive factor so D^3 * sum c^2 = 1 again (all of them if every weight
/// is named). Levels are re-sorted together with their weights when a shift
/// reorders them.
template <typename Scalar>
SpectralData<Scalar> perturb(const SpectralData<Scalar>& data, const Perturbation<Scalar>& p) {
  const Eigen::Index n = data.size();
  SpectralData<Scalar> out = data;
  for (const auto& [index, shift] : p.level_shifts) {
    if (index < 1 || index > n) {
      throw Error(ErrorKind::invalid_input, "level shift index " + std::to_string(index) + " out of range",
                  static_cast<long>(index));
    }
    out.levels[index - 1] += shift;
  }
  std::vector<bool> touched(static_cast<std::size_t>(n), false);
  for (const auto& [index, factor] : p.weight_factors) {
    if (index < 1 || index > n) {
      throw Error(ErrorKind::invalid_input, "weight factor index " + std::to_string(index) + " out of range",
                  static_cast<long>(index));
    }
    if (!(factor > Scalar(0))) {
      throw Error(ErrorKind::invalid_input, "weight factors must be positive", static_cast<long>(index));
    }
    out.weights[index - 1] *= factor;
    touched[static_cast<std::size_t>(index - 1)] = true;
  }

  const Scalar d3 = data.grid.step() * data.grid.step() * data.grid.step();
  Scalar fixed = 0, free = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const Scalar w2 = d3 * out.weights[i] * out.weights[i];
    (touched[static_cast<std::size_t>(i)] ? fixed : free) += w2;
  }
  if (free > Scalar(0)) {
    if (!(fixed < Scalar(1))) {
      throw Error(ErrorKind::invalid_input, "rescaled weights leave no room for the others");
    }
    const Scalar scale = std::sqrt((Scalar(1) - fixed) / free);
    for (Eigen::Index i = 0; i < n; ++i) {
      if (!touched[static_cast<std::size_t>(i)]) out.weights[i] *= scale;
    }
  } else {
    out.weights /= std::sqrt(fixed);
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return out.levels[a] < out.levels[b]; });
  SpectralData<Scalar> sorted = out;
  for (Eigen::Index i = 0; i < n; ++i) {
    sorted.levels[i] = out.levels[order[static_cast<std::size_t>(i)]];
    sorted.weights[i] = out.weights[order[static_cast<std::size_t>(i)]];
  }
  validate(sorted);
  return sorted;
}

}  // namespace jinv
