#include <doctest.h>

#include "fixtures.hpp"
#include "jinv/continuum.hpp"

using namespace jinv;

namespace {

JacobiOperator<double> symmetric_target(Eigen::Index half, std::uint64_t seed) {
  const auto h = fixtures::random_target(half, seed);
  Vector<double> v(2 * half), u(2 * half - 1);
  v << h.v, h.v.reverse();
  u << h.u, 0.04, h.u.reverse();
  return make_operator<double>(2 * half, v, u, 0.0);
}

RefinementStudy<double> shift_study(std::vector<Eigen::Index> sizes) {
  return RefinementStudy<double>{std::move(sizes), Perturbation<double>{{{1, 1.0}}, {}}, 32};
}

}  // namespace

TEST_CASE("effective potential folds in both couplings") {
  Vector<double> v(3), u(2);
  v << 1, 2, 3;
  u << 0.1, 0.2;
  const auto veff = effective_potential(make_operator<double>(3, v, u, 0.5));
  CHECK(veff[0] == doctest::Approx(1.2));
  CHECK(veff[1] == doctest::Approx(2.4));
  CHECK(veff[2] == doctest::Approx(4.0));
}

TEST_CASE("diagonal derivative and anchor") {
  TransformKernel<double> k;
  k.grid = Grid<double>(4);
  k.k = Matrix<double>::Zero(4, 4);
  k.k.diagonal() << 0.1, 0.3, 0.6, 1.0;
  const Vector<double> dd = diagonal_derivative(k);
  const double d = k.grid.step();
  REQUIRE(dd.size() == 3);
  CHECK(dd[0] == doctest::Approx(2 * 0.2 / d));
  CHECK(dd[2] == doctest::Approx(2 * 0.4 / d));
  CHECK(diagonal_anchor(k) == doctest::Approx(-0.1));
}

TEST_CASE("Goursat residual of the identity inversion vanishes") {
  const auto ref = free_well<double>(20);
  const auto data = extract_spectral_data(eigensolve(ref));
  const auto rec = invert(make_problem(ref, data), Method::synthesis);
  CHECK(goursat_residual(rec.kernel, rec.op, ref) < 1e-9);
  CHECK(std::abs(diagonal_anchor(rec.kernel)) < 1e-10);
  CHECK_THROWS_AS(goursat_residual(invert(make_problem(free_well<double>(5),
                                                       extract_spectral_data(eigensolve(free_well<double>(5)))))
                                       .kernel,
                                   free_well<double>(5), free_well<double>(5)),
                  Error);
}

TEST_CASE("Goursat residual of a kernel built from known coefficients") {
  // K chosen by hand, V_eff read off from the discrete equation along one
  // column; the residual must pick up the deliberate error elsewhere.
  const Eigen::Index n = 8;
  TransformKernel<double> k;
  k.grid = Grid<double>(n);
  k.k = Matrix<double>::Zero(n, n);
  const auto ref = free_well<double>(n);
  auto rec = free_well<double>(n);
  k.k(5, 2) = 1.0;  // K(x_6, x_3)
  // Point (m, n) = (6, 3): K_xx = -2/D^2, K_yy = -2/D^2, so only the potential
  // term survives: -(V_eff(x_6) - 0) * 1.
  rec.v[5] = 0.25;
  const double expected_point = 0.25;
  // Neighbouring points see +1/D^2 from one second difference only.
  const double neighbour = k.grid.inv_step2();
  const double worst = std::max(expected_point, neighbour);
  CHECK(goursat_residual(k, rec, ref) == doctest::Approx(worst / 2.0));
}

TEST_CASE("right-edge inversion of a mirror-symmetric target") {
  const auto target = symmetric_target(6, 21);
  const auto ref = free_well<double>(12);
  const auto es = eigensolve(target), ref_es = eigensolve(ref);
  const auto left = invert(make_problem(ref, extract_spectral_data(es)));
  const auto right = invert_right_edge(
      InversionProblem<double>{ref, extract_right_spectral_data(ref_es), extract_right_spectral_data(es)});
  CHECK(max_coefficient_gap(right.op, reflect(left.op)) <= 1e-6);
  CHECK(max_coefficient_gap(right.op, target) <= 1e-8);
  CHECK(mirror_gap(right, ref) <= 1e-6);
}

TEST_CASE("right-edge inversion recovers a general target") {
  const auto target = fixtures::random_target(12, 8);
  const auto ref = free_well<double>(12);
  const auto right = invert_right_edge(InversionProblem<double>{
      ref, extract_right_spectral_data(eigensolve(ref)), extract_right_spectral_data(eigensolve(target))});
  CHECK(max_coefficient_gap(*right.synthesis_op, target) <= 1e-8);
  CHECK(max_coefficient_gap(*right.recursion_op, target) <= 1e-8);
  CHECK(mirror_gap(right, ref) <= 1e-6);
  // Solutions are mirrored: zero at the right wall, D one node in.
  CHECK(right.solutions.values(13, 0) == 0.0);
  CHECK(right.solutions.values(12, 0) == doctest::Approx(ref.grid.step()));
  const auto left_data = extract_spectral_data(eigensolve(ref));
  CHECK_THROWS_AS(invert_right_edge(make_problem(ref, left_data)), Error);
}

TEST_CASE("profiles are not extrapolated past the lattice") {
  const auto report = run_refinement_study(shift_study({8}));
  const auto& row = report.rows[0];
  const Grid<double> g(8);
  for (Eigen::Index j = 0; j < report.mesh.size(); ++j) {
    CHECK(std::isnan(row.veff_profile[j]) == (report.mesh[j] < g.node(1) || report.mesh[j] > g.node(7)));
  }
  CHECK(std::isfinite(row.factor2_gap));
}

TEST_CASE("interpolation and comparison mesh") {
  Vector<double> xs(3), ys(3);
  xs << 0, 1, 3;
  ys << 0, 2, 0;
  CHECK(interpolate(xs, ys, 0.5) == doctest::Approx(1.0));
  CHECK(interpolate(xs, ys, 2.0) == doctest::Approx(1.0));
  CHECK(interpolate(xs, ys, -1.0) == 0.0);
  CHECK(interpolate(xs, ys, 5.0) == 0.0);
  const auto mesh = comparison_mesh<double>(32);
  CHECK(mesh.size() == 32);
  CHECK(mesh[0] == doctest::Approx(std::numbers::pi / 33));
  CHECK(mesh[31] < std::numbers::pi);
}

TEST_CASE("study validation") {
  CHECK_THROWS_AS(validate(shift_study({})), Error);
  CHECK_THROWS_AS(validate(shift_study({6, 12})), Error);
  CHECK_THROWS_AS(validate(shift_study({40, 40})), Error);
  CHECK_THROWS_AS(validate(shift_study({80, 40})), Error);
  auto s = shift_study({8, 16});
  s.perturbation.level_shifts = {{3, 0.1}};
  CHECK_THROWS_AS(validate(s), Error);
  s.perturbation.level_shifts = {{2, 0.1}};
  CHECK_NOTHROW(validate(s));
}

TEST_CASE("a reordering shift is reported per size") {
  auto s = shift_study({8, 16});
  s.perturbation.level_shifts = {{1, 50.0}};
  const auto report = run_refinement_study(s);
  CHECK(!report.rows[1].ok);
  CHECK(!report.rows[1].error.empty());
  CHECK(!report.monotone());
}

TEST_CASE("zero perturbation gives an all-zero study") {
  RefinementStudy<double> s{{8, 16, 32}, {}, 32};
  const auto report = run_refinement_study(s);
  for (const auto& row : report.rows) {
    CHECK(row.ok);
    CHECK(row.factor2_gap < kStudyNoiseFloor);
    CHECK(row.goursat < kStudyNoiseFloor);
  }
  CHECK(report.rows[1].cauchy_diff < kStudyNoiseFloor);
  CHECK(report.monotone());
}

TEST_CASE("single size leaves the refinement columns empty") {
  const auto report = run_refinement_study(shift_study({8}));
  CHECK(report.rows.size() == 1);
  CHECK(std::isnan(report.rows[0].cauchy_diff));
  CHECK(std::isnan(report.rows[0].est_order));
}

TEST_CASE("lowest-level shift converges under refinement") {
  const auto report = run_refinement_study(shift_study({40, 80, 160}));
  REQUIRE(report.rows.size() == 3);
  for (const auto& row : report.rows) REQUIRE(row.ok);
  CHECK(report.monotone());
  CHECK(report.rows[2].factor2_gap < 0.5 * report.rows[0].factor2_gap);
  for (int i = 1; i < 3; ++i) {
    const double ratio = report.rows[i - 1].goursat / report.rows[i].goursat;
    CHECK(ratio >= 1.4);
    CHECK(ratio <= 2.8);
  }
  // The anchor shrinks faster than D.
  CHECK(std::abs(report.rows[2].anchor) < std::abs(report.rows[0].anchor));
  CHECK(report.rows[2].cauchy_diff < report.rows[1].cauchy_diff);
  CHECK(report.rows[2].est_order >= 0.5);
  CHECK(report.rows[2].est_order <= 1.5);
}

TEST_CASE("Cauchy differences halve per doubling in the asymptotic range") {
  const auto report = run_refinement_study(shift_study({80, 160, 320}));
  REQUIRE(report.rows[2].ok);
  const double ratio = report.rows[1].cauchy_diff / report.rows[2].cauchy_diff;
  CHECK(ratio >= 1.4);
  CHECK(ratio <= 2.8);
  CHECK(report.rows[2].est_order == doctest::Approx(1.0).epsilon(0.5));
}
