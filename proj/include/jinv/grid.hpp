#pragma once

#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/Dense>

#include "jinv/error.hpp"

namespace jinv {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// Uniform partition of [0, pi] with `size()` interior nodes.
///
/// Nodes are x_n = n * step() for n = 0..N+1; node 0 and node N+1 carry the
/// Dirichlet walls. Indices in this library are 1-based when they name a
/// grid node, matching the recurrence, and 0-based when they index an Eigen
/// vector over the interior nodes.
template <typename Scalar = double>
class Grid {
 public:
  Grid() = default;

  explicit Grid(Eigen::Index n_interior) : n_(n_interior) {
    if (n_interior < 1) {
      throw Error(ErrorKind::invalid_input, "grid needs at least one interior node");
    }
    step_ = std::numbers::pi_v<Scalar> / static_cast<Scalar>(n_interior + 1);
  }

  Eigen::Index size() const noexcept { return n_; }
  Scalar step() const noexcept { return step_; }

  /// x_n for n = 0..N+1. The right wall returns pi itself, not (N+1)*step.
  Scalar node(Eigen::Index n) const noexcept {
    if (n == n_ + 1) return std::numbers::pi_v<Scalar>;
    return static_cast<Scalar>(n) * step_;
  }

  /// Interior nodes x_1..x_N.
  Vector<Scalar> interior_nodes() const {
    Vector<Scalar> x(n_);
    for (Eigen::Index i = 0; i < n_; ++i) x[i] = node(i + 1);
    return x;
  }

  Scalar inv_step2() const noexcept { return Scalar(1) / (step_ * step_); }

  friend bool operator==(const Grid& a, const Grid& b) { return a.n_ == b.n_; }

 private:
  Eigen::Index n_ = 0;
  Scalar step_ = Scalar(0);
};

/// Discrete Sturm-Liouville operator H = T + J on a Grid.
///
/// `v[i]` is V(x_{i+1}); `u[i]` is u(x_{i+1}) and couples x_{i+1} with x_{i+2},
/// so row n of H reads  u(x_{n-1}) psi_{n-1} + (2/D^2 + V(x_n)) psi_n + u(x_n) psi_{n+1}
/// plus the kinetic -1/D^2 couplings. `u_edge` is u(x_N), the coefficient of
/// the node beyond the right wall; it never enters the matrix but does enter
/// the recurrence past x_N.
template <typename Scalar = double>
struct JacobiOperator {
  Grid<Scalar> grid;
  Vector<Scalar> v;
  Vector<Scalar> u;
  Scalar u_edge = Scalar(0);

  Eigen::Index size() const noexcept { return grid.size(); }
};

inline constexpr double kMinRecurrenceDenominator = 1e-10;

/// Throws when the operator breaks a type invariant.
template <typename Scalar>
void validate(const JacobiOperator<Scalar>& op) {
  const Eigen::Index n = op.grid.size();
  if (n < 1) throw Error(ErrorKind::invalid_input, "operator has an empty grid");
  if (op.v.size() != n) {
    throw Error(ErrorKind::invalid_input,
                "v has length " + std::to_string(op.v.size()) + ", expected " + std::to_string(n));
  }
  if (op.u.size() != n - 1) {
    throw Error(ErrorKind::invalid_input,
                "u has length " + std::to_string(op.u.size()) + ", expected " + std::to_string(n - 1));
  }
  if (!op.v.allFinite() || !op.u.allFinite() || !std::isfinite(static_cast<double>(op.u_edge))) {
    throw Error(ErrorKind::invalid_input, "operator coefficients must be finite");
  }
  const Scalar d2 = op.grid.step() * op.grid.step();
  for (Eigen::Index i = 0; i < n - 1; ++i) {
    if (std::abs(Scalar(1) - d2 * op.u[i]) < Scalar(kMinRecurrenceDenominator)) {
      throw Error(ErrorKind::invalid_input, "1 - D^2 u vanishes at node " + std::to_string(i + 1),
                  static_cast<long>(i + 1));
    }
  }
  if (std::abs(Scalar(1) - d2 * op.u_edge) < Scalar(kMinRecurrenceDenominator)) {
    throw Error(ErrorKind::invalid_input, "1 - D^2 u_edge vanishes", static_cast<long>(n));
  }
}

/// Operator with V = 0, u = 0: the infinite square well.
template <typename Scalar = double>
JacobiOperator<Scalar> free_well(Eigen::Index n) {
  JacobiOperator<Scalar> op{Grid<Scalar>(n), Vector<Scalar>::Zero(n), Vector<Scalar>::Zero(n - 1),
                            Scalar(0)};
  return op;
}

template <typename Scalar>
JacobiOperator<Scalar> make_operator(Eigen::Index n, Vector<Scalar> v, Vector<Scalar> u,
                                     Scalar u_edge = Scalar(0)) {
  JacobiOperator<Scalar> op{Grid<Scalar>(n), std::move(v), std::move(u), u_edge};
  validate(op);
  return op;
}

/// Subdiagonal of H: u(x_n) - 1/D^2 for n = 1..N-1.
template <typename Scalar>
Vector<Scalar> off_diagonal(const JacobiOperator<Scalar>& op) {
  return (op.u.array() - op.grid.inv_step2()).matrix();
}

/// Main diagonal of H: 2/D^2 + V(x_n).
template <typename Scalar>
Vector<Scalar> main_diagonal(const JacobiOperator<Scalar>& op) {
  return (op.v.array() + Scalar(2) * op.grid.inv_step2()).matrix();
}

/// Dense H = T + J.
template <typename Scalar>
Matrix<Scalar> assemble(const JacobiOperator<Scalar>& op) {
  validate(op);
  const Eigen::Index n = op.size();
  Matrix<Scalar> h = Matrix<Scalar>::Zero(n, n);
  h.diagonal() = main_diagonal(op);
  if (n > 1) {
    const Vector<Scalar> off = off_diagonal(op);
    h.diagonal(1) = off;
    h.diagonal(-1) = off;
  }
  return h;
}

/// Coordinate reversal x -> pi - x. The reflected operator has no analogue
/// of u(x_0) on record, so its u_edge is `reflected_edge` (0 by default).
template <typename Scalar>
JacobiOperator<Scalar> reflect(const JacobiOperator<Scalar>& op, Scalar reflected_edge = Scalar(0)) {
  JacobiOperator<Scalar> out{op.grid, op.v.reverse(), op.u.reverse(), reflected_edge};
  return out;
}

}  // namespace jinv
