#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <random>

#include "jinv/grid.hpp"
#include "jinv/tridiagonal_eigen.hpp"

using namespace jinv;

TEST_CASE("grid nodes") {
  const Grid<double> g(4);
  CHECK(g.step() == doctest::Approx(std::numbers::pi / 5));
  CHECK(g.node(0) == 0.0);
  CHECK(g.node(5) == std::numbers::pi);
  CHECK(g.node(2) == doctest::Approx(2 * std::numbers::pi / 5));
  CHECK(g.interior_nodes().size() == 4);
  CHECK_THROWS_AS(Grid<double>(0), Error);
}

TEST_CASE("assembled matrix of a free well") {
  const auto op = free_well<double>(3);
  const Matrix<double> h = assemble(op);
  const double k = op.grid.inv_step2();
  CHECK(h(0, 0) == doctest::Approx(2 * k));
  CHECK(h(0, 1) == doctest::Approx(-k));
  CHECK(h(1, 0) == doctest::Approx(-k));
  CHECK(h(0, 2) == 0.0);
  CHECK(h.isApprox(h.transpose()));
}

TEST_CASE("potential and coupling land on the right entries") {
  Vector<double> v(3), u(2);
  v << 0.1, -0.2, 0.3;
  u << 0.05, -0.07;
  const auto op = make_operator<double>(3, v, u, 0.4);
  const Matrix<double> h = assemble(op);
  const double k = op.grid.inv_step2();
  CHECK(h(1, 1) == doctest::Approx(2 * k - 0.2));
  CHECK(h(1, 2) == doctest::Approx(-0.07 - k));
  CHECK(main_diagonal(op)[2] == doctest::Approx(2 * k + 0.3));
  CHECK(off_diagonal(op)[0] == doctest::Approx(0.05 - k));
}

TEST_CASE("operator validation") {
  Vector<double> v = Vector<double>::Zero(3);
  CHECK_THROWS_AS(make_operator<double>(3, v, Vector<double>::Zero(1), 0.0), Error);
  CHECK_THROWS_AS(make_operator<double>(3, Vector<double>::Zero(2), Vector<double>::Zero(2), 0.0), Error);
  Vector<double> bad = Vector<double>::Zero(3);
  bad[1] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(make_operator<double>(3, bad, Vector<double>::Zero(2), 0.0), Error);
  const double k = Grid<double>(3).inv_step2();
  Vector<double> u(2);
  u << k, 0.0;
  try {
    make_operator<double>(3, v, u, 0.0);
    FAIL("expected singular coupling");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::invalid_input);
    CHECK(e.index() == 1);
  }
  CHECK_THROWS_AS(make_operator<double>(3, v, Vector<double>::Zero(2), k), Error);
}

TEST_CASE("reflection reverses the coefficients") {
  Vector<double> v(3), u(2);
  v << 1, 2, 3;
  u << 4, 5;
  const auto r = reflect(make_operator<double>(3, v, u, 6.0));
  CHECK(r.v[0] == 3.0);
  CHECK(r.u[0] == 5.0);
  CHECK(r.u_edge == 0.0);
  const auto rr = reflect(r, 6.0);
  CHECK(rr.v == v);
  CHECK(rr.u == u);
  CHECK(rr.u_edge == 6.0);
}

TEST_CASE("assembled matrix is exactly tridiagonal and symmetric") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> dist(-1, 1);
  Vector<double> v(9), u(8);
  for (auto& x : v) x = dist(rng);
  for (auto& x : u) x = 0.1 * dist(rng);
  const Matrix<double> h = assemble(make_operator<double>(9, v, u, 0.3));
  for (int i = 0; i < 9; ++i) {
    for (int j = 0; j < 9; ++j) {
      if (std::abs(i - j) >= 2) CHECK(h(i, j) == 0.0);
      CHECK(h(i, j) == h(j, i));
    }
  }
}

TEST_CASE("reflection preserves the spectrum") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> dist(-1, 1);
  Vector<double> v(12), u(11);
  for (auto& x : v) x = dist(rng);
  for (auto& x : u) x = 0.1 * dist(rng);
  const auto op = make_operator<double>(12, v, u, 0.0);
  const Eigen::SelfAdjointEigenSolver<Matrix<double>> a(assemble(op)), b(assemble(reflect(op)));
  CHECK(((a.eigenvalues() - b.eigenvalues()).array().abs() <= 1e-10 * a.eigenvalues().array().abs()).all());

  Vector<double> sym_u(5);
  sym_u << 0.1, 0.2, 0.3, 0.2, 0.1;
  const auto sym = make_operator<double>(6, Vector<double>::Constant(6, 0.7), sym_u, 0.0);
  const auto r = reflect(sym);
  CHECK(r.v == sym.v);
  CHECK(r.u == sym.u);
}

TEST_CASE("tridiagonal eigensolver agrees with a dense symmetric solver") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> dist(-1, 1);
  for (int n : {1, 2, 5, 17, 64}) {
    Vector<double> diag(n), off(std::max(n - 1, 0));
    for (int i = 0; i < n; ++i) diag[i] = 3 * dist(rng);
    for (int i = 0; i + 1 < n; ++i) off[i] = dist(rng);
    const auto te = tridiagonal_eigen(diag, off);
    Matrix<double> dense = Matrix<double>::Zero(n, n);
    dense.diagonal() = diag;
    for (int i = 0; i + 1 < n; ++i) dense(i, i + 1) = dense(i + 1, i) = off[i];
    const Eigen::SelfAdjointEigenSolver<Matrix<double>> oracle(dense);
    CHECK((te.values - oracle.eigenvalues()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((dense * te.vectors - te.vectors * te.values.asDiagonal()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((te.vectors.transpose() * te.vectors - Matrix<double>::Identity(n, n)).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("tridiagonal eigensolver handles tight clusters") {
  // Weakly coupled copies of the same block give near-degenerate pairs.
  const int n = 40;
  Vector<double> diag(n), off(n - 1);
  for (int i = 0; i < n; ++i) diag[i] = 2.0 + (i % 2);
  for (int i = 0; i + 1 < n; ++i) off[i] = (i % 2 == 0) ? 0.5 : 1e-9;
  const auto te = tridiagonal_eigen(diag, off);
  CHECK((te.vectors.transpose() * te.vectors - Matrix<double>::Identity(n, n)).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("tridiagonal eigensolver rejects mismatched input") {
  CHECK_THROWS_AS(tridiagonal_eigen(Vector<double>(3), Vector<double>(3)), Error);
  CHECK_THROWS_AS(tridiagonal_eigen(Vector<double>(0), Vector<double>(0)), Error);
}
