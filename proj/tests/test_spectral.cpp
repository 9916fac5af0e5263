#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <random>

#include "jinv/spectral.hpp"

using namespace jinv;

namespace {

JacobiOperator<double> random_operator(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> v(-1, 1), u(-0.1, 0.1);
  Vector<double> pv(n), pu(n - 1);
  for (int i = 0; i < n; ++i) pv[i] = v(rng);
  for (int i = 0; i + 1 < n; ++i) pu[i] = u(rng);
  return make_operator<double>(n, pv, pu, u(rng));
}

}  // namespace

TEST_CASE("single node") {
  const auto es = eigensolve(free_well<double>(1));
  const double d = std::numbers::pi / 2;
  CHECK(es.levels[0] == doctest::Approx(2 / (d * d)));
  CHECK(es.levels[0] == doctest::Approx(0.810569).epsilon(1e-6));
  const auto data = extract_spectral_data(es);
  CHECK(data.weights[0] == doctest::Approx(std::pow(d, -1.5)));
}

TEST_CASE("two nodes in closed form") {
  const auto op = free_well<double>(2);
  const auto es = eigensolve(op);
  const double d = std::numbers::pi / 3, k = 1 / (d * d);
  CHECK(es.levels[0] == doctest::Approx(k).epsilon(1e-14));
  CHECK(es.levels[1] == doctest::Approx(3 * k).epsilon(1e-14));
  CHECK(es.levels[0] == doctest::Approx(0.911891).epsilon(1e-6));
  CHECK(es.levels[1] == doctest::Approx(2.735672).epsilon(1e-6));
  // Psi = (1, +-1) / sqrt(2 D): c = 1 / sqrt(2 D^3).
  const auto data = extract_spectral_data(es);
  const double c = 1 / std::sqrt(2 * d * d * d);
  CHECK(data.weights[0] == doctest::Approx(c));
  CHECK(data.weights[1] == doctest::Approx(c));
  CHECK(c == doctest::Approx(0.659844).epsilon(1e-6));
}

TEST_CASE("single node with a potential") {
  Vector<double> v(1);
  v << 5.0;
  const auto op = make_operator<double>(1, v, Vector<double>(0), 0.0);
  const auto es = eigensolve(op);
  const double d = op.grid.step();
  CHECK(es.levels[0] == doctest::Approx(2 / (d * d) + 5));
  CHECK(es.vectors(0, 0) == doctest::Approx(1 / std::sqrt(d)));
  CHECK(extract_spectral_data(es).weights[0] == doctest::Approx(std::pow(d, -1.5)));
}

TEST_CASE("two-node regular solutions at the eigenvalues") {
  const auto op = free_well<double>(2);
  const double d = op.grid.step(), k = op.grid.inv_step2();
  const Vector<double> lo = regular_solution(op, k);
  const Vector<double> hi = regular_solution(op, 3 * k);
  CHECK(lo[0] == 0.0);
  CHECK(lo[1] == d);
  CHECK(lo[2] == doctest::Approx(d));
  CHECK(std::abs(lo[3]) < 1e-14);
  CHECK(hi[2] == doctest::Approx(-d));
  CHECK(std::abs(hi[3]) < 1e-14);
}

TEST_CASE("parseval defect detects a missing vector") {
  auto es = eigensolve(random_operator(10, 2));
  CHECK(parseval_defect(es) < 1e-10);
  const double peak = es.vectors.col(4).cwiseAbs2().maxCoeff();
  es.vectors.col(4).setZero();
  CHECK(parseval_defect(es) >= es.grid.step() * peak * (1 - 1e-12));
}

TEST_CASE("free-well spectrum matches the analytic formula") {
  for (int n : {3, 10, 100}) {
    const auto op = free_well<double>(n);
    const auto es = eigensolve(op);
    const double d = op.grid.step();
    for (int nu = 1; nu <= n; ++nu) {
      const double exact = 4 / (d * d) * std::pow(std::sin(nu * d / 2), 2);
      CHECK(std::abs(es.levels[nu - 1] - exact) <= 1e-12 * exact);
    }
  }
}

TEST_CASE("eigensystem agrees with a dense solver and is complete") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto op = random_operator(12, seed);
    const auto es = eigensolve(op);
    const Eigen::SelfAdjointEigenSolver<Matrix<double>> oracle(assemble(op));
    CHECK((es.levels - oracle.eigenvalues()).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(parseval_defect(es) < 1e-12);
    CHECK((es.vectors.row(0).array() > 0).all());
    const auto data = extract_spectral_data(es);
    CHECK(weight_constraint_defect(data) < 1e-12);
  }
}

TEST_CASE("regular solutions vanish at the right wall on eigenvalues") {
  const auto op = random_operator(12, 3);
  const auto es = eigensolve(op);
  for (int nu = 0; nu < 12; ++nu) {
    const Vector<double> phi = regular_solution(op, es.levels[nu]);
    CHECK(phi[0] == 0.0);
    CHECK(phi[1] == doctest::Approx(op.grid.step()));
    CHECK(std::abs(phi[13]) < 1e-8 * phi.cwiseAbs().maxCoeff());
    // phi = Psi / c on the interior.
    const double c = es.vectors(0, nu) / op.grid.step();
    CHECK((phi.segment(1, 12) - es.vectors.col(nu) / c).cwiseAbs().maxCoeff() < 1e-9 * phi.cwiseAbs().maxCoeff());
  }
}

TEST_CASE("regular solutions are orthonormal under the spectral weights") {
  const auto op = random_operator(20, 11);
  const auto data = extract_spectral_data(eigensolve(op));
  CHECK(weighted_orthogonality_defect(regular_solutions(op, data.levels), data) < 1e-10);
}

TEST_CASE("right-wall weights of a mirror-symmetric operator equal the left ones") {
  const auto half = random_operator(6, 5);
  Vector<double> v(12), u(11);
  v << half.v, half.v.reverse();
  u << half.u, 0.02, half.u.reverse();
  const auto es = eigensolve(make_operator<double>(12, v, u, 0.0));
  const auto left = extract_spectral_data(es);
  const auto right = extract_right_spectral_data(es);
  CHECK((left.weights - right.weights).cwiseAbs().maxCoeff() < 1e-9 * left.weights.maxCoeff());
  CHECK(right.orientation == Orientation::right);
}

TEST_CASE("spectral data invariants") {
  auto data = extract_spectral_data(eigensolve(free_well<double>(4)));
  CHECK_NOTHROW(validate(data));
  auto bad = data;
  bad.weights *= 1.1;
  CHECK_THROWS_AS(validate(bad), Error);
  bad = data;
  std::swap(bad.levels[0], bad.levels[1]);
  CHECK_THROWS_AS(validate(bad), Error);
  bad = data;
  bad.weights[2] = -bad.weights[2];
  CHECK_THROWS_AS(validate(bad), Error);
  bad = data;
  bad.levels[1] = bad.levels[0];
  CHECK_THROWS_AS(validate(bad), Error);
}

TEST_CASE("perturbation renormalizes and re-sorts") {
  const auto base = extract_spectral_data(eigensolve(free_well<double>(8)));
  SUBCASE("level shift alone keeps the weights") {
    const auto p = perturb(base, Perturbation<double>{{{1, 1.0}}, {}});
    CHECK(p.levels[0] == doctest::Approx(base.levels[0] + 1));
    CHECK((p.weights - base.weights).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("weight factor rescales the others") {
    const auto p = perturb(base, Perturbation<double>{{}, {{2, 1.5}}});
    CHECK(p.weights[1] == doctest::Approx(1.5 * base.weights[1]));
    CHECK(weight_constraint_defect(p) < 1e-12);
    const double ratio = p.weights[0] / base.weights[0];
    CHECK(p.weights[5] / base.weights[5] == doctest::Approx(ratio));
  }
  SUBCASE("shift past the next level swaps with its weight") {
    const double gap = base.levels[1] - base.levels[0];
    const auto p = perturb(base, Perturbation<double>{{{1, gap + 0.5}}, {{1, 1.2}}});
    CHECK(p.levels[0] == doctest::Approx(base.levels[1]));
    CHECK(p.levels[1] == doctest::Approx(base.levels[0] + gap + 0.5));
    CHECK(p.weights[1] == doctest::Approx(1.2 * base.weights[0]));
  }
  SUBCASE("invalid perturbations") {
    CHECK_THROWS_AS(perturb(base, Perturbation<double>{{{9, 1.0}}, {}}), Error);
    CHECK_THROWS_AS(perturb(base, Perturbation<double>{{}, {{1, -1.0}}}), Error);
    CHECK_THROWS_AS(perturb(base, Perturbation<double>{{}, {{1, 1e6}}}), Error);
  }
}

TEST_CASE("long double instantiation") {
  const auto op = free_well<long double>(10);
  const auto es = eigensolve(op);
  const long double d = op.grid.step();
  const long double exact = 4 / (d * d) * std::pow(std::sin(d / 2), 2);
  CHECK(static_cast<double>(std::abs(es.levels[0] - exact) / exact) < 1e-15);
  CHECK(static_cast<double>(parseval_defect(es)) < 1e-15);
}
