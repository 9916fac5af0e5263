#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "jinv/spectral.hpp"

namespace jinv {

/// Known reference system plus the spectral data the new system must have.
template <typename Scalar = double>
struct InversionProblem {
  JacobiOperator<Scalar> reference;
  SpectralData<Scalar> reference_data;
  SpectralData<Scalar> target_data;
};

template <typename Scalar>
void validate(const InversionProblem<Scalar>& p) {
  validate(p.reference);
  validate(p.reference_data);
  validate(p.target_data);
  if (!(p.reference.grid == p.reference_data.grid) || !(p.reference.grid == p.target_data.grid)) {
    throw Error(ErrorKind::invalid_input, "reference operator and spectral data live on different grids");
  }
  if (p.reference_data.orientation != Orientation::left || p.target_data.orientation != Orientation::left) {
    throw Error(ErrorKind::invalid_input, "left inversion needs left-oriented spectral data");
  }
}

/// Builds the problem for a reference operator, taking its spectral data
/// from the forward solver.
template <typename Scalar>
InversionProblem<Scalar> make_problem(const JacobiOperator<Scalar>& reference, SpectralData<Scalar> target) {
  InversionProblem<Scalar> p{reference, extract_spectral_data(eigensolve(reference)), std::move(target)};
  validate(p);
  return p;
}

template <typename Scalar = double>
struct QKernel {
  Grid<Scalar> grid;
  Matrix<Scalar> q;
};

/// How K(x_n, x_n) is defined; the GL system only fixes n < m.
enum class DiagonalConvention {
  nearest_subdiagonal,   ///< K(x_n,x_n) := K(x_{n+1},x_n), K(x_N,x_N) := K(x_N,x_{N-1})
  linear_extrapolation,  ///< K(x_n,x_n) := 2K(x_{n+1},x_n) - K(x_{n+2},x_n) where available
};

/// Transformation kernel of the inversion.
///
/// The strictly lower part of `k` holds K(x_m, x_n), n < m, in the unit
/// leading-coefficient form  phi(x_m) = phi°(x_m) + sum_{n<m} D K(x_m,x_n) phi°(x_n).
/// The diagonal of `k` holds the conventional K(x_n, x_n).
///
/// When the off-diagonal couplings change, the new regular solutions carry
/// an extra factor on phi°(x_m): phi_new(x_m) = scale_m * phi(x_m), with
/// scale_m = prod_{n<m} (1/D^2 - u°_n) / (1/D^2 - u_n). `scale` recovers it
/// from the weighted norms; it is 1 whenever u = u°.
template <typename Scalar = double>
struct TransformKernel {
  Grid<Scalar> grid;
  Matrix<Scalar> k;
  Vector<Scalar> scale;
  /// sum_mu c°_mu^2 phi(x_{N+1}, E°_mu) phi°(x_n, E°_mu) for n = N-1, N.
  /// Empty until the operator is recovered (it needs V(x_N), u(x_{N-1})).
  Vector<Scalar> edge_row;
  /// Largest 1-norm condition estimate over the GL row systems (1 for the oracle).
  Scalar condition = Scalar(1);
  /// Largest absolute GL row residual.
  Scalar residual = Scalar(0);

  Scalar operator()(Eigen::Index m, Eigen::Index n) const { return k(m - 1, n - 1); }

  /// Unit-lower-triangular map from phi° to phi, including the scale:
  /// L = diag(scale) * (I + D * strictly_lower(K)).
  Matrix<Scalar> transform_matrix() const {
    const Eigen::Index n = grid.size();
    Matrix<Scalar> lower = k.template triangularView<Eigen::StrictlyLower>();
    Matrix<Scalar> l = Matrix<Scalar>::Identity(n, n) + grid.step() * lower;
    return scale.asDiagonal() * l;
  }
};

inline constexpr double kMaxConditionEstimate = 1e12;
inline constexpr double kGlResidualTolerance = 1e-10;

namespace detail {

template <typename Scalar>
void fill_diagonal(Matrix<Scalar>& k, DiagonalConvention convention) {
  const Eigen::Index n = k.rows();
  if (n == 1) {
    k(0, 0) = Scalar(0);
    return;
  }
  for (Eigen::Index i = 0; i + 1 < n; ++i) {
    k(i, i) = k(i + 1, i);
    if (convention == DiagonalConvention::linear_extrapolation && i + 2 < n) {
      k(i, i) = Scalar(2) * k(i + 1, i) - k(i + 2, i);
    }
  }
  k(n - 1, n - 1) = k(n - 1, n - 2);
}

/// Interior reference solutions, one column per energy.
template <typename Scalar>
Matrix<Scalar> reference_solutions(const JacobiOperator<Scalar>& ref, const Vector<Scalar>& energies) {
  return regular_solutions(ref, energies).interior();
}

template <typename Scalar>
Matrix<Scalar> weighted_outer(const Matrix<Scalar>& phi, const Vector<Scalar>& weights) {
  return phi * weights.array().square().matrix().asDiagonal() * phi.transpose();
}

}  // namespace detail

/// Q(x_m,x_n) = sum_nu c_nu^2 phi°(x_m,E_nu) phi°(x_n,E_nu)
///            - sum_mu c°_mu^2 phi°(x_m,E°_mu) phi°(x_n,E°_mu).
template <typename Scalar>
QKernel<Scalar> build_q(const InversionProblem<Scalar>& p) {
  validate(p);
  const Matrix<Scalar> phi_new = detail::reference_solutions(p.reference, p.target_data.levels);
  const Matrix<Scalar> phi_old = detail::reference_solutions(p.reference, p.reference_data.levels);
  QKernel<Scalar> q{p.reference.grid, detail::weighted_outer(phi_new, p.target_data.weights) -
                                          detail::weighted_outer(phi_old, p.reference_data.weights)};
  // Both sums are symmetric; drop rounding asymmetry.
  q.q = (Scalar(0.5) * (q.q + q.q.transpose())).eval();
  return q;
}

/// Solves K(x_m,x_n) + Q(x_m,x_n) + D sum_{p<m} K(x_m,x_p) Q(x_p,x_n) = 0,
/// n < m, row by row.
template <typename Scalar>
TransformKernel<Scalar> solve_gl(const QKernel<Scalar>& q,
                                 DiagonalConvention convention = DiagonalConvention::nearest_subdiagonal) {
  const Eigen::Index n = q.grid.size();
  const Scalar d = q.grid.step();
  TransformKernel<Scalar> out{q.grid, Matrix<Scalar>::Zero(n, n), Vector<Scalar>::Ones(n), Vector<Scalar>(0)};
  const Scalar q_max = q.q.size() > 0 ? q.q.cwiseAbs().maxCoeff() : Scalar(0);

  for (Eigen::Index row = 1; row < n; ++row) {
    const Eigen::Index m = row + 1;
    const Matrix<Scalar> system = Matrix<Scalar>::Identity(row, row) + d * q.q.topLeftCorner(row, row).transpose();
    const Vector<Scalar> rhs = -q.q.row(row).head(row).transpose();
    Eigen::PartialPivLU<Matrix<Scalar>> lu(system);
    const Scalar rcond = lu.rcond();
    const Scalar cond = rcond > Scalar(0) ? Scalar(1) / rcond : std::numeric_limits<Scalar>::infinity();
    if (!(cond <= Scalar(kMaxConditionEstimate))) {
      throw Error(ErrorKind::noninvertible_data,
                  "GL system for row " + std::to_string(m) + " is singular or ill-conditioned",
                  static_cast<long>(m));
    }
    out.condition = std::max(out.condition, cond);
    const Vector<Scalar> krow = lu.solve(rhs);
    const Scalar residual = (system * krow - rhs).cwiseAbs().maxCoeff();
    if (!(residual <= Scalar(kGlResidualTolerance) * (Scalar(1) + q_max))) {
      throw Error(ErrorKind::noninvertible_data, "GL row " + std::to_string(m) + " residual too large",
                  static_cast<long>(m));
    }
    out.residual = std::max(out.residual, residual);
    out.k.row(row).head(row) = krow.transpose();
  }

  // D * sum_nu c_nu^2 phi(x_m,E_nu)^2 for the unit-leading solutions, by
  // orthogonality equal to 1 + D Q(m,m) + D^2 sum_{p<m} K(m,p) Q(p,m).
  for (Eigen::Index row = 0; row < n; ++row) {
    const Scalar norm2 = Scalar(1) + d * q.q(row, row) +
                         d * d * out.k.row(row).head(row).dot(q.q.col(row).head(row));
    if (!(norm2 > Scalar(0))) {
      throw Error(ErrorKind::degenerate_data, "new solution at node " + std::to_string(row + 1) + " has no norm",
                  static_cast<long>(row + 1));
    }
    out.scale[row] = Scalar(1) / std::sqrt(norm2);
  }
  detail::fill_diagonal(out.k, convention);
  return out;
}

/// Direct weighted Gram-Schmidt over the energy index: the row vectors
/// phi°(x_m, E_nu), nu = 1..N, are orthogonalized in the inner product
/// <a,b> = sum_nu c_nu^2 a_nu b_nu with unit leading coefficient.
/// Independent of build_q/solve_gl.
template <typename Scalar>
TransformKernel<Scalar> gram_schmidt_oracle(const InversionProblem<Scalar>& p,
                                            DiagonalConvention convention = DiagonalConvention::nearest_subdiagonal) {
  validate(p);
  const Eigen::Index n = p.reference.size();
  const Scalar d = p.reference.grid.step();
  const Matrix<Scalar> basis = detail::reference_solutions(p.reference, p.target_data.levels).transpose();
  const Vector<Scalar> w2 = p.target_data.weights.array().square().matrix();
  auto inner = [&](const Vector<Scalar>& a, const Vector<Scalar>& b) {
    return (a.array() * w2.array() * b.array()).sum();
  };

  // Column m of `ortho` is the new vector for node m; coeff holds it in the basis.
  Matrix<Scalar> ortho(n, n);
  Matrix<Scalar> coeff = Matrix<Scalar>::Identity(n, n);
  Vector<Scalar> norms(n);
  for (Eigen::Index m = 0; m < n; ++m) {
    Vector<Scalar> w = basis.col(m);
    for (int pass = 0; pass < 2; ++pass) {
      for (Eigen::Index j = 0; j < m; ++j) {
        const Scalar proj = inner(w, ortho.col(j)) / norms[j];
        w -= proj * ortho.col(j);
        coeff.row(m) -= proj * coeff.row(j);
      }
    }
    norms[m] = inner(w, w);
    const Scalar basis_norm = inner(basis.col(m), basis.col(m));
    if (!(norms[m] > std::numeric_limits<Scalar>::epsilon() * basis_norm)) {
      throw Error(ErrorKind::degenerate_data, "Gram matrix is singular at node " + std::to_string(m + 1),
                  static_cast<long>(m + 1));
    }
    ortho.col(m) = w;
  }

  TransformKernel<Scalar> out{p.reference.grid, Matrix<Scalar>::Zero(n, n), Vector<Scalar>(n), Vector<Scalar>(0)};
  out.k.template triangularView<Eigen::StrictlyLower>() = coeff / d;
  out.scale = (d * norms).cwiseSqrt().cwiseInverse();
  detail::fill_diagonal(out.k, convention);
  return out;
}

/// Whether transformed solutions carry the scale factor.
enum class Leading { unit, normalized };

/// phi(x_m, E) = s_m * [phi°(x_m, E) + sum_{n<m} D K(x_m,x_n) phi°(x_n, E)],
/// with s_m = scale_m for Leading::normalized and 1 for Leading::unit.
/// Row N+1 is NaN: it depends on the recovered V(x_N), u(x_{N-1}).
template <typename Scalar>
RegularSolutionTable<Scalar> transformed_solutions(const TransformKernel<Scalar>& k,
                                                   const JacobiOperator<Scalar>& ref,
                                                   const Vector<Scalar>& energies,
                                                   Leading leading = Leading::normalized) {
  const Eigen::Index n = ref.size();
  const Matrix<Scalar> phi_old = detail::reference_solutions(ref, energies);
  Matrix<Scalar> l = k.transform_matrix();
  if (leading == Leading::unit) l = k.scale.cwiseInverse().asDiagonal() * l;
  RegularSolutionTable<Scalar> table{energies, Matrix<Scalar>(n + 2, energies.size())};
  table.values.row(0).setZero();
  table.values.middleRows(1, n) = l * phi_old;
  table.values.row(n + 1).setConstant(std::numeric_limits<Scalar>::quiet_NaN());
  return table;
}

/// max_{m>n} |K(x_m,x_n) - K_sum(x_m,x_n)| where
/// K_sum = -sum_nu c_nu^2 phi(x_m,E_nu) phi°(x_n,E_nu) + sum_mu c°_mu^2 phi(x_m,E°_mu) phi°(x_n,E°_mu)
/// with unit-leading transformed solutions phi.
template <typename Scalar>
Scalar k_cross_check(const TransformKernel<Scalar>& k, const InversionProblem<Scalar>& p) {
  const Eigen::Index n = p.reference.size();
  const auto& tgt = p.target_data;
  const auto& old = p.reference_data;
  const Matrix<Scalar> new_at_new = transformed_solutions(k, p.reference, tgt.levels, Leading::unit).interior();
  const Matrix<Scalar> new_at_old = transformed_solutions(k, p.reference, old.levels, Leading::unit).interior();
  const Matrix<Scalar> ref_at_new = detail::reference_solutions(p.reference, tgt.levels);
  const Matrix<Scalar> ref_at_old = detail::reference_solutions(p.reference, old.levels);
  const Matrix<Scalar> k_sum =
      -new_at_new * tgt.weights.array().square().matrix().asDiagonal() * ref_at_new.transpose() +
      new_at_old * old.weights.array().square().matrix().asDiagonal() * ref_at_old.transpose();
  Scalar worst = 0;
  for (Eigen::Index m = 1; m < n; ++m) {
    for (Eigen::Index j = 0; j < m; ++j) worst = std::max(worst, std::abs(k.k(m, j) - k_sum(m, j)));
  }
  return worst;
}

}  // namespace jinv
