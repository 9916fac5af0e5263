#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>

#include "jinv/gl_inversion.hpp"

namespace jinv {

enum class Method { synthesis, recursion, both };

inline const char* to_string(Method m) {
  switch (m) {
    case Method::synthesis: return "synthesis";
    case Method::recursion: return "recursion";
    case Method::both: return "both";
  }
  return "unknown";
}

template <typename Scalar = double>
struct Synthesis {
  JacobiOperator<Scalar> op;
  Scalar leakage = Scalar(0);  ///< max |H_mn| over |m-n| >= 2
  Scalar norm = Scalar(0);     ///< infinity norm of the synthesized H
};

inline constexpr double kLeakageTolerance = 1e-6;

/// H_mn = D * sum_nu E_nu Psi_nu(x_m) Psi_nu(x_n) with Psi_nu = c_nu phi_nu;
/// V and u are read off the three central bands. u_edge is not carried by
/// the spectral data and must be supplied (the reference value).
template <typename Scalar>
Synthesis<Scalar> synthesize_operator(const RegularSolutionTable<Scalar>& solutions,
                                      const SpectralData<Scalar>& data, Scalar u_edge) {
  const Grid<Scalar>& grid = data.grid;
  const Eigen::Index n = grid.size();
  const Scalar k = grid.inv_step2();
  const Matrix<Scalar> psi = solutions.interior() * data.weights.asDiagonal();
  const Matrix<Scalar> h = grid.step() * psi * data.levels.asDiagonal() * psi.transpose();

  Synthesis<Scalar> out;
  out.norm = h.cwiseAbs().rowwise().sum().maxCoeff();
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 2; j < n; ++j) out.leakage = std::max(out.leakage, std::abs(h(i, j)));
  }
  if (out.leakage > Scalar(kLeakageTolerance) * out.norm) {
    throw Error(ErrorKind::non_tridiagonal_synthesis,
                "off-band leakage " + std::to_string(static_cast<double>(out.leakage)) +
                    " exceeds tolerance; spectral data inconsistent with the solutions");
  }
  out.op.grid = grid;
  out.op.v = (h.diagonal().array() - Scalar(2) * k).matrix();
  out.op.u = n > 1 ? Vector<Scalar>((h.diagonal(1).array() + k).matrix()) : Vector<Scalar>(0);
  out.op.u_edge = u_edge;
  return out;
}

/// phi(x_{N+1}, E°_mu) from row N of the new Schrodinger equation, using
/// V(x_N), u(x_{N-1}) of `partial` and u(x_N) = u°(x_N):
///   phi(x_{N+1}) = D^2/(1 - D^2 u_N) [u_{N-1} phi(x_{N-1}) + V_N phi(x_N) - E phi(x_N)]
///                - (-2 phi(x_N) + phi(x_{N-1})) / (1 - D^2 u_N)
template <typename Scalar>
Vector<Scalar> extend_solution_beyond_edge(const JacobiOperator<Scalar>& partial, const TransformKernel<Scalar>& k,
                                           const JacobiOperator<Scalar>& ref,
                                           const SpectralData<Scalar>& reference_data) {
  const Eigen::Index n = ref.size();
  const Scalar d = ref.grid.step();
  const Scalar d2 = d * d;
  const Scalar denom = Scalar(1) - d2 * ref.u_edge;
  if (std::abs(denom) < Scalar(kMinRecurrenceDenominator)) {
    throw Error(ErrorKind::singular_edge, "1 - D^2 u(x_N) vanishes", static_cast<long>(n));
  }
  const Matrix<Scalar> phi = transformed_solutions(k, ref, reference_data.levels).interior();
  const Scalar u_prev = n >= 2 ? partial.u[n - 2] : Scalar(0);
  const Vector<Scalar> last = phi.row(n - 1).transpose();
  const Vector<Scalar> before = n >= 2 ? Vector<Scalar>(phi.row(n - 2).transpose()) : Vector<Scalar>::Zero(phi.cols());
  Vector<Scalar> out(phi.cols());
  for (Eigen::Index mu = 0; mu < phi.cols(); ++mu) {
    out[mu] = d2 / denom * (u_prev * before[mu] + partial.v[n - 1] * last[mu] - reference_data.levels[mu] * last[mu]) -
              (Scalar(-2) * last[mu] + before[mu]) / denom;
  }
  return out;
}

/// sum_mu c°_mu^2 phi(x_{N+1},E°_mu) phi°(x_n,E°_mu) for n = max(1,N-1)..N.
template <typename Scalar>
Vector<Scalar> edge_row(const Vector<Scalar>& beyond_edge, const JacobiOperator<Scalar>& ref,
                        const SpectralData<Scalar>& reference_data) {
  const Eigen::Index n = ref.size();
  const Eigen::Index count = std::min<Eigen::Index>(2, n);
  const Matrix<Scalar> phi_old = detail::reference_solutions(ref, reference_data.levels);
  const Vector<Scalar> w = (reference_data.weights.array().square() * beyond_edge.array()).matrix();
  return phi_old.bottomRows(count) * w;
}

template <typename Scalar = double>
struct Recursion {
  JacobiOperator<Scalar> op;
  /// Smallest |det| / (|row_1| |row_2|) over the 2x2 systems that were solved.
  Scalar min_relative_determinant = std::numeric_limits<Scalar>::infinity();
  /// Rows solved with the n = m-2, m-3 pair and rows that fell back to n = m, m-1.
  Eigen::Index generic_rows = 0;
  Eigen::Index fallback_rows = 0;
};

inline constexpr double kRecursionDeterminantTolerance = 1e-10;

namespace detail {

/// Row m, column n of  H L = L H°  with L = transform_matrix():
///   a_{m-1} L(m-1,n) + b_m L(m,n) + a_m L(m+1,n)
///     = L(m,n-1) a°_{n-1} + L(m,n) b°_n + L(m,n+1) a°_n,
/// where a are off-diagonal and b diagonal entries of H. This is the
/// difference form of the potential equations (n <= m-2 generic, n = m-1
/// and n = m near the diagonal, n = m+1 the scale relation).
template <typename Scalar>
class Intertwining {
 public:
  Intertwining(const Matrix<Scalar>& l, const JacobiOperator<Scalar>& ref) : l_(l), n_(ref.size()) {
    a_ref_ = Vector<Scalar>::Zero(n_ + 1);
    b_ref_ = Vector<Scalar>::Zero(n_ + 1);
    const Scalar k = ref.grid.inv_step2();
    for (Eigen::Index i = 1; i <= n_ - 1; ++i) a_ref_[i] = ref.u[i - 1] - k;
    a_ref_[n_] = ref.u_edge - k;
    for (Eigen::Index i = 1; i <= n_; ++i) b_ref_[i] = ref.v[i - 1] + Scalar(2) * k;
  }

  Scalar l(Eigen::Index m, Eigen::Index n) const {
    if (m < 1 || n < 1 || m > n_ || n > n_) return Scalar(0);
    return l_(m - 1, n - 1);
  }

  Scalar rhs(Eigen::Index m, Eigen::Index n) const {
    return l(m, n - 1) * (n >= 2 ? a_ref_[n - 1] : Scalar(0)) + l(m, n) * b_ref_[n] +
           (n <= n_ ? l(m, n + 1) * a_ref_[n] : Scalar(0));
  }

  Scalar a_ref(Eigen::Index n) const { return a_ref_[n]; }

 private:
  const Matrix<Scalar>& l_;
  Eigen::Index n_;
  Vector<Scalar> a_ref_, b_ref_;
};

template <typename Scalar>
JacobiOperator<Scalar> operator_from_bands(const Grid<Scalar>& grid, const Vector<Scalar>& a, const Vector<Scalar>& b,
                                           Scalar u_edge) {
  const Eigen::Index n = grid.size();
  const Scalar k = grid.inv_step2();
  JacobiOperator<Scalar> op{grid, Vector<Scalar>(n), Vector<Scalar>(std::max<Eigen::Index>(n - 1, 0)), u_edge};
  for (Eigen::Index m = 1; m <= n; ++m) op.v[m - 1] = b[m] - Scalar(2) * k;
  for (Eigen::Index m = 1; m <= n - 1; ++m) op.u[m - 1] = a[m] + k;
  return op;
}

}  // namespace detail

/// Backward recovery of V and u from the kernel.
///
/// u(x_N) is pinned to the reference. V(x_N) follows from phi(x_{N+1}, E_nu) = 0
/// at the target levels, u(x_{N-1}) from the n = m+1 relation at m = N-1.
/// Then for m = N-1 down to 1 the pair n = m-2, m-3 yields V(x_m), u(x_{m-1});
/// where that pair is missing or degenerate the n = m, m-1 pair is used.
template <typename Scalar>
Recursion<Scalar> recover_recursive(const TransformKernel<Scalar>& k, const InversionProblem<Scalar>& p) {
  const Eigen::Index n = p.reference.size();
  const Matrix<Scalar> l = k.transform_matrix();
  detail::Intertwining<Scalar> eq(l, p.reference);
  Vector<Scalar> a = Vector<Scalar>::Zero(n + 1);
  Vector<Scalar> b = Vector<Scalar>::Zero(n + 1);
  Recursion<Scalar> out;

  a[n] = eq.a_ref(n);
  const Matrix<Scalar> phi = transformed_solutions(k, p.reference, p.target_data.levels).interior();
  const auto& tgt = p.target_data;
  const Vector<Scalar> w2 = tgt.weights.array().square().matrix();
  const Vector<Scalar> last = phi.row(n - 1).transpose();
  const Scalar norm_last = (w2.array() * last.array().square()).sum();
  if (!(norm_last > Scalar(0))) {
    throw Error(ErrorKind::recursion_degenerate, "new solution vanishes at the last node", static_cast<long>(n));
  }
  b[n] = (w2.array() * tgt.levels.array() * last.array().square()).sum() / norm_last;
  if (n >= 2) a[n - 1] = eq.a_ref(n - 1) * eq.l(n - 1, n - 1) / eq.l(n, n);

  for (Eigen::Index m = n - 1; m >= 1; --m) {
    bool solved = false;
    if (m >= 4) {
      const Eigen::Index c1 = m - 2, c2 = m - 3;
      const Scalar a11 = eq.l(m - 1, c1), a12 = eq.l(m, c1);
      const Scalar a21 = eq.l(m - 1, c2), a22 = eq.l(m, c2);
      const Scalar r1 = eq.rhs(m, c1) - a[m] * eq.l(m + 1, c1);
      const Scalar r2 = eq.rhs(m, c2) - a[m] * eq.l(m + 1, c2);
      const Scalar det = a11 * a22 - a12 * a21;
      const Scalar scale = std::hypot(a11, a12) * std::hypot(a21, a22);
      if (scale > Scalar(0) && std::abs(det) >= Scalar(kRecursionDeterminantTolerance) * scale) {
        a[m - 1] = (r1 * a22 - a12 * r2) / det;
        b[m] = (a11 * r2 - a21 * r1) / det;
        out.min_relative_determinant = std::min(out.min_relative_determinant, std::abs(det) / scale);
        ++out.generic_rows;
        solved = true;
      }
    }
    if (!solved) {
      const Scalar diag_here = eq.l(m, m);
      const Scalar diag_prev = m >= 2 ? eq.l(m - 1, m - 1) : Scalar(1);
      if (std::abs(diag_here * diag_prev) < Scalar(kRecursionDeterminantTolerance)) {
        throw Error(ErrorKind::recursion_degenerate, "near-diagonal pair is degenerate at node " + std::to_string(m),
                    static_cast<long>(m));
      }
      b[m] = (eq.rhs(m, m) - a[m] * eq.l(m + 1, m)) / diag_here;
      if (m >= 2) {
        a[m - 1] = (eq.rhs(m, m - 1) - b[m] * eq.l(m, m - 1) - a[m] * eq.l(m + 1, m - 1)) / diag_prev;
      }
      ++out.fallback_rows;
    }
  }
  out.op = detail::operator_from_bands(p.reference.grid, a, b, p.reference.u_edge);
  return out;
}

/// Operator produced when only the first `m_star` nodes are re-orthogonalized
/// (rows beyond m_star of the transform left at the identity). Rows
/// 1..m_star-1 coincide with the full recovery; row m_star is the last
/// row of the transformed block; beyond it the reference is untouched.
template <typename Scalar>
JacobiOperator<Scalar> recover_block(const TransformKernel<Scalar>& k, const JacobiOperator<Scalar>& ref,
                                     Eigen::Index m_star) {
  const Eigen::Index n = ref.size();
  if (m_star < 1 || m_star >= n) {
    throw Error(ErrorKind::invalid_input, "block size must lie in [1, N-1]");
  }
  Matrix<Scalar> l = k.transform_matrix();
  l.bottomRows(n - m_star).setZero();
  l.bottomRightCorner(n - m_star, n - m_star).setIdentity();
  detail::Intertwining<Scalar> eq(l, ref);

  Vector<Scalar> a = Vector<Scalar>::Zero(n + 1);
  Vector<Scalar> b = Vector<Scalar>::Zero(n + 1);
  for (Eigen::Index m = 1; m <= n; ++m) {
    b[m] = ref.v[m - 1] + Scalar(2) * ref.grid.inv_step2();
    a[m] = eq.a_ref(m);
  }
  for (Eigen::Index m = 1; m <= m_star; ++m) {
    a[m] = eq.a_ref(m) * eq.l(m, m) / eq.l(m + 1, m + 1);
    b[m] = (eq.rhs(m, m) - a[m] * eq.l(m + 1, m)) / eq.l(m, m);
  }
  return detail::operator_from_bands(ref.grid, a, b, ref.u_edge);
}

/// Residuals recorded by a full inversion.
template <typename Scalar = double>
struct Diagnostics {
  Scalar gl_residual = 0;
  Scalar gl_condition = 1;
  Scalar k_cross_check = 0;
  /// max |1/scale_m^2 - 1|: diagonal defect of the unit-leading solutions.
  Scalar leading_norm_defect = 0;
  /// Weighted orthogonality of the recovered operator's own regular solutions.
  Scalar orthonormality_defect = 0;
  Scalar leakage = 0;
  Scalar relative_leakage = 0;
  Scalar recursion_synthesis_gap = std::numeric_limits<Scalar>::quiet_NaN();
  Scalar min_recursion_determinant = std::numeric_limits<Scalar>::quiet_NaN();
  Eigen::Index recursion_generic_rows = 0;
  Eigen::Index recursion_fallback_rows = 0;
  std::string recursion_error;
};

template <typename Scalar = double>
struct RecoveredSystem {
  JacobiOperator<Scalar> op;
  Method method = Method::synthesis;
  std::optional<JacobiOperator<Scalar>> synthesis_op;
  std::optional<JacobiOperator<Scalar>> recursion_op;
  TransformKernel<Scalar> kernel;
  RegularSolutionTable<Scalar> solutions;
  Diagnostics<Scalar> diagnostics;
};

template <typename Scalar>
Scalar max_coefficient_gap(const JacobiOperator<Scalar>& a, const JacobiOperator<Scalar>& b) {
  Scalar gap = (a.v - b.v).cwiseAbs().maxCoeff();
  if (a.u.size() > 0) gap = std::max(gap, (a.u - b.u).cwiseAbs().maxCoeff());
  return gap;
}

/// build_q -> solve_gl -> recovery. Synthesis is the primary result for
/// Method::both; a failing recursion under Method::both is recorded in the
/// diagnostics instead of thrown.
template <typename Scalar>
RecoveredSystem<Scalar> invert(const InversionProblem<Scalar>& p, Method method = Method::both,
                               DiagonalConvention convention = DiagonalConvention::nearest_subdiagonal) {
  validate(p);
  const QKernel<Scalar> q = build_q(p);
  RecoveredSystem<Scalar> out;
  out.method = method;
  out.kernel = solve_gl(q, convention);
  auto& diag = out.diagnostics;
  diag.gl_residual = out.kernel.residual;
  diag.gl_condition = out.kernel.condition;
  diag.k_cross_check = k_cross_check(out.kernel, p);
  diag.leading_norm_defect = (out.kernel.scale.array().square().inverse() - Scalar(1)).abs().maxCoeff();
  out.solutions = transformed_solutions(out.kernel, p.reference, p.target_data.levels);

  if (method != Method::recursion) {
    Synthesis<Scalar> syn = synthesize_operator(out.solutions, p.target_data, p.reference.u_edge);
    diag.leakage = syn.leakage;
    diag.relative_leakage = syn.norm > 0 ? syn.leakage / syn.norm : Scalar(0);
    out.synthesis_op = std::move(syn.op);
  }
  if (method != Method::synthesis) {
    try {
      Recursion<Scalar> rec = recover_recursive(out.kernel, p);
      diag.min_recursion_determinant = rec.min_relative_determinant;
      diag.recursion_generic_rows = rec.generic_rows;
      diag.recursion_fallback_rows = rec.fallback_rows;
      out.recursion_op = std::move(rec.op);
    } catch (const Error& e) {
      if (method == Method::recursion) throw;
      diag.recursion_error = e.what();
    }
  }
  if (out.synthesis_op && out.recursion_op) {
    diag.recursion_synthesis_gap = max_coefficient_gap(*out.synthesis_op, *out.recursion_op);
  }
  out.op = out.synthesis_op ? *out.synthesis_op : *out.recursion_op;

  const Vector<Scalar> beyond = extend_solution_beyond_edge(out.op, out.kernel, p.reference, p.reference_data);
  out.kernel.edge_row = edge_row(beyond, p.reference, p.reference_data);
  const Eigen::Index n = p.reference.size();
  const Matrix<Scalar> interior = out.solutions.interior();
  for (Eigen::Index j = 0; j < out.solutions.energies.size(); ++j) {
    const Scalar prev = n >= 2 ? interior(n - 2, j) : Scalar(0);
    const Scalar u_prev = n >= 2 ? out.op.u[n - 2] : Scalar(0);
    const Scalar kk = p.reference.grid.inv_step2();
    out.solutions.values(n + 1, j) =
        ((Scalar(2) * kk + out.op.v[n - 1] - out.solutions.energies[j]) * interior(n - 1, j) + (u_prev - kk) * prev) /
        (kk - p.reference.u_edge);
  }

  diag.orthonormality_defect =
      weighted_orthogonality_defect(regular_solutions(out.op, p.target_data.levels), p.target_data);
  return out;
}

}  // namespace jinv
