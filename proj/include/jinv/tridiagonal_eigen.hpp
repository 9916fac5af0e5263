#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "jinv/grid.hpp"

namespace jinv {

/// Eigenpairs of a symmetric tridiagonal matrix, ascending, with unit
/// Euclidean-norm eigenvectors stored as columns.
template <typename Scalar>
struct TridiagonalEigen {
  Vector<Scalar> values;
  Matrix<Scalar> vectors;
};

namespace detail {

/// Number of eigenvalues strictly below x (Sturm count of the LDL^T pivots).
template <typename Scalar>
Eigen::Index sturm_count(const Vector<Scalar>& diag, const Vector<Scalar>& off, Scalar x,
                         Scalar pivmin) {
  Eigen::Index count = 0;
  Scalar q = diag[0] - x;
  if (std::abs(q) < pivmin) q = -pivmin;
  if (q < 0) ++count;
  for (Eigen::Index i = 1; i < diag.size(); ++i) {
    q = diag[i] - x - off[i - 1] * off[i - 1] / q;
    if (std::abs(q) < pivmin) q = -pivmin;
    if (q < 0) ++count;
  }
  return count;
}

/// LU factorization of a tridiagonal matrix with partial pivoting (the
/// dgttrf/dgtts2 scheme). Zero pivots are replaced by `tiny`, which is what
/// inverse iteration wants at a converged shift.
template <typename Scalar>
class TridiagonalLu {
 public:
  TridiagonalLu(Vector<Scalar> diag, Vector<Scalar> sub, Vector<Scalar> super, Scalar tiny)
      : d_(std::move(diag)), dl_(std::move(sub)), du_(std::move(super)) {
    const Eigen::Index n = d_.size();
    du2_ = Vector<Scalar>::Zero(std::max<Eigen::Index>(n - 2, 0));
    swapped_.assign(static_cast<std::size_t>(std::max<Eigen::Index>(n - 1, 0)), false);
    for (Eigen::Index i = 0; i + 1 < n; ++i) {
      if (std::abs(d_[i]) >= std::abs(dl_[i])) {
        if (d_[i] != Scalar(0)) {
          const Scalar fact = dl_[i] / d_[i];
          dl_[i] = fact;
          d_[i + 1] -= fact * du_[i];
        }
      } else {
        const Scalar fact = d_[i] / dl_[i];
        d_[i] = dl_[i];
        dl_[i] = fact;
        const Scalar temp = du_[i];
        du_[i] = d_[i + 1];
        d_[i + 1] = temp - fact * d_[i + 1];
        if (i + 2 < n) {
          du2_[i] = du_[i + 1];
          du_[i + 1] = -fact * du_[i + 1];
        }
        swapped_[static_cast<std::size_t>(i)] = true;
      }
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      if (std::abs(d_[i]) < tiny) d_[i] = d_[i] < 0 ? -tiny : tiny;
    }
  }

  Vector<Scalar> solve(Vector<Scalar> b) const {
    const Eigen::Index n = d_.size();
    for (Eigen::Index i = 0; i + 1 < n; ++i) {
      if (!swapped_[static_cast<std::size_t>(i)]) {
        b[i + 1] -= dl_[i] * b[i];
      } else {
        const Scalar temp = b[i];
        b[i] = b[i + 1];
        b[i + 1] = temp - dl_[i] * b[i];
      }
    }
    b[n - 1] /= d_[n - 1];
    if (n > 1) b[n - 2] = (b[n - 2] - du_[n - 2] * b[n - 1]) / d_[n - 2];
    for (Eigen::Index i = n - 3; i >= 0; --i) {
      b[i] = (b[i] - du_[i] * b[i + 1] - du2_[i] * b[i + 2]) / d_[i];
    }
    return b;
  }

 private:
  Vector<Scalar> d_, dl_, du_, du2_;
  std::vector<bool> swapped_;
};

}  // namespace detail

inline constexpr int kBisectionIterationCap = 256;
inline constexpr int kInverseIterationCap = 8;

/// Bisection on Sturm counts for the eigenvalues, inverse iteration for the
/// vectors. Vectors of eigenvalues closer than 1e-3 * |T| are
/// reorthogonalized against each other.
template <typename Scalar>
TridiagonalEigen<Scalar> tridiagonal_eigen(const Vector<Scalar>& diag, const Vector<Scalar>& off) {
  using std::abs;
  const Eigen::Index n = diag.size();
  if (n < 1 || off.size() != n - 1) {
    throw Error(ErrorKind::invalid_input, "tridiagonal bands have inconsistent lengths");
  }
  const Scalar eps = std::numeric_limits<Scalar>::epsilon();

  // Gershgorin interval.
  Scalar lo = diag[0], hi = diag[0];
  Scalar norm = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const Scalar radius = (i > 0 ? abs(off[i - 1]) : Scalar(0)) + (i + 1 < n ? abs(off[i]) : Scalar(0));
    lo = std::min(lo, diag[i] - radius);
    hi = std::max(hi, diag[i] + radius);
    norm = std::max(norm, abs(diag[i]) + radius);
  }
  if (norm == Scalar(0)) norm = Scalar(1);
  const Scalar pivmin = std::numeric_limits<Scalar>::min() * Scalar(1e4) +
                        eps * eps * (off.size() > 0 ? off.squaredNorm() : Scalar(0));
  lo -= Scalar(2) * eps * norm * n + pivmin;
  hi += Scalar(2) * eps * norm * n + pivmin;

  TridiagonalEigen<Scalar> out;
  out.values.resize(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    Scalar a = lo, b = hi;
    int it = 0;
    for (; it < kBisectionIterationCap; ++it) {
      const Scalar mid = Scalar(0.5) * (a + b);
      if (b - a <= Scalar(2) * eps * std::max(abs(a), abs(b)) + pivmin || mid == a || mid == b) break;
      if (detail::sturm_count(diag, off, mid, pivmin) > k) {
        b = mid;
      } else {
        a = mid;
      }
    }
    if (it == kBisectionIterationCap) {
      throw Error(ErrorKind::convergence_failure,
                  "bisection did not converge for eigenvalue " + std::to_string(k + 1),
                  static_cast<long>(k + 1));
    }
    out.values[k] = Scalar(0.5) * (a + b);
  }

  out.vectors.resize(n, n);
  const Scalar cluster_gap = Scalar(1e-3) * norm;
  const Scalar tiny = eps * norm;
  for (Eigen::Index k = 0; k < n; ++k) {
    const Scalar lambda = out.values[k];
    Vector<Scalar> sub = off, super = off;
    detail::TridiagonalLu<Scalar> lu((diag.array() - lambda).matrix(), sub, super, tiny);

    Eigen::Index first_in_cluster = k;
    while (first_in_cluster > 0 && out.values[k] - out.values[first_in_cluster - 1] < cluster_gap) {
      --first_in_cluster;
    }

    // Deterministic start vector with no special symmetry.
    Vector<Scalar> x(n);
    for (Eigen::Index i = 0; i < n; ++i) x[i] = Scalar(1) + Scalar(0.1) * std::sin(Scalar(i + 1) * Scalar(1.7) + Scalar(k));
    x.normalize();
    bool converged = false;
    for (int it = 0; it < kInverseIterationCap; ++it) {
      x = lu.solve(x);
      for (Eigen::Index j = first_in_cluster; j < k; ++j) {
        x -= out.vectors.col(j).dot(x) * out.vectors.col(j);
      }
      x.normalize();
      Vector<Scalar> r = (diag.array() * x.array()).matrix() - lambda * x;
      if (n > 1) {
        r.head(n - 1) += (off.array() * x.tail(n - 1).array()).matrix();
        r.tail(n - 1) += (off.array() * x.head(n - 1).array()).matrix();
      }
      if (it >= 1 && r.norm() <= Scalar(100) * eps * norm * std::sqrt(Scalar(n))) {
        converged = true;
        break;
      }
    }
    if (!converged) {
      throw Error(ErrorKind::convergence_failure,
                  "inverse iteration did not converge for eigenvector " + std::to_string(k + 1),
                  static_cast<long>(k + 1));
    }
    out.vectors.col(k) = x;
  }
  return out;
}

}  // namespace jinv
