#include <random>

#include "doctest.h"
#include "gpt/qfit.hpp"

using namespace gpt;
using namespace gpt::polytope;
using namespace gpt::qfit;

namespace {

MatrixXd cube_vertices(double half = 1.0) {
  MatrixXd V(8, 3);
  for (int i = 0; i < 8; ++i) V.row(i) << (i & 1 ? half : -half), (i & 2 ? half : -half), (i & 4 ? half : -half);
  return V;
}

MatrixXd cross_vertices() {
  MatrixXd V(6, 3);
  V << MatrixXd::Identity(3, 3), -MatrixXd::Identity(3, 3);
  return V;
}

HRep cube_halfspaces(double half) {
  HRep h;
  h.A.resize(6, 3);
  h.A << MatrixXd::Identity(3, 3), -MatrixXd::Identity(3, 3);
  h.b = VectorXd::Constant(6, half);
  return h;
}

MatrixXd diamond_effects(const MatrixXd& n) {
  MatrixXd E(n.cols() + 1, 2 * n.rows() + 2);
  E.col(0) = VectorXd::Unit(n.cols() + 1, 0);
  E.col(1).setZero();
  for (Index i = 0; i < n.rows(); ++i) {
    E.col(2 + 2 * i) << 0.5, 0.5 * n.row(i).transpose();
    E.col(3 + 2 * i) << 0.5, -0.5 * n.row(i).transpose();
  }
  return E;
}

MatrixXd with_ones(const MatrixXd& x) {
  MatrixXd S(x.rows(), x.cols() + 1);
  S << MatrixXd::Ones(x.rows(), 1), x;
  return S;
}

}  // namespace

TEST_CASE("shrink_model") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  GptModel m;
  m.states = MatrixXd::NullaryExpr(6, 4, [&]() { return u(rng); });
  m.states.col(0).setOnes();
  m.effects = MatrixXd::NullaryExpr(4, 5, [&]() { return u(rng); });
  m.effects.col(0) = VectorXd::Unit(4, 0);

  const auto same = shrink_model(m, 1.0);
  CHECK(same.states == m.states);
  CHECK(same.effects == m.effects);

  const double c = 0.99;
  const auto s = shrink_model(m, c);
  CHECK(s.states.col(0) == m.states.col(0));
  CHECK(s.effects.row(0) == m.effects.row(0));
  for (Index i = 0; i < 6; ++i)
    CHECK(s.states.row(i).tail(3).norm() == doctest::Approx(c * m.states.row(i).tail(3).norm()).epsilon(1e-15));
  // D' = baseline + c^2 (D - baseline), baseline = s0 e0 outer product.
  const MatrixXd baseline = m.states.col(0) * m.effects.row(0);
  const MatrixXd expect = baseline + c * c * (m.probabilities() - baseline);
  CHECK((s.probabilities() - expect).cwiseAbs().maxCoeff() < 1e-15);

  CHECK_THROWS_AS(shrink_model(m, 0.0), ValidationError);
  CHECK_THROWS_AS(shrink_model(m, 1.1), ValidationError);
}

TEST_CASE("ellipsoid_between fixtures") {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  MatrixXd ball = MatrixXd::NullaryExpr(40, 3, [&]() { return g(rng); });
  for (Index i = 0; i < ball.rows(); ++i) ball.row(i) *= u(rng) / ball.row(i).norm();
  auto r = ellipsoid_between(ball, cube_halfspaces(2.0));
  REQUIRE(r.status == Status::feasible);
  CHECK(ellipsoid_residual(r.Q, ball, cube_halfspaces(2.0)) <= 1e-7);
  // Q = I satisfies both sets directly.
  CHECK(ellipsoid_residual(MatrixXd::Identity(3, 3), ball, cube_halfspaces(2.0)) <= 0.0);

  // Boundary-touching: octahedron vertices, unit cube; only Q = I works.
  auto oct = ellipsoid_between(cross_vertices(), cube_halfspaces(1.0));
  REQUIRE(oct.status == Status::feasible);
  CHECK(ellipsoid_residual(oct.Q, cross_vertices(), cube_halfspaces(1.0)) <= 1e-7);
  CHECK((oct.Q - MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-3);
  CHECK(ellipsoid_residual(MatrixXd::Identity(3, 3), cross_vertices(), cube_halfspaces(1.0)) == 0.0);

  // A point outside the outer polytope.
  MatrixXd out = ball;
  out.row(0) << 2.5, 0, 0;
  CHECK(ellipsoid_between(out, cube_halfspaces(2.0)).status == Status::infeasible);

  // Cube corners cannot sit inside an ellipsoid within the unit cube.
  CHECK(ellipsoid_between(cube_vertices(), cube_halfspaces(1.0)).status == Status::infeasible);
  CHECK(ellipsoid_between(cube_vertices(0.99), cube_halfspaces(1.0)).status == Status::infeasible);
  CHECK(ellipsoid_between(cube_vertices(1.0 / std::sqrt(3.0)), cube_halfspaces(1.0)).status == Status::feasible);
  CHECK(ellipsoid_between(cube_vertices(1.0 / std::sqrt(3.0) + 1e-4), cube_halfspaces(1.0)).status ==
        Status::infeasible);

  // Elongated fit needs a non-spherical Q.
  MatrixXd pts(2, 3);
  pts << 1.8, 0, 0, 0, 0.4, 0;
  HRep box;
  box.A = cube_halfspaces(1).A;
  box.b.resize(6);
  box.b << 2, 0.5, 0.5, 2, 0.5, 0.5;
  auto el = ellipsoid_between(pts, box);
  REQUIRE(el.status == Status::feasible);
  CHECK(ellipsoid_residual(el.Q, pts, box) <= 1e-7);

  HRep bad = cube_halfspaces(1.0);
  bad.b(0) = 0.0;
  CHECK_THROWS_AS(ellipsoid_between(cross_vertices(), bad), ValidationError);
}

TEST_CASE("ellipsoid_between against an enumeration oracle") {
  // Axis-aligned boxes with points on the axes: a diagonal Q = diag(q) is
  // feasible iff for each axis max |v_i|^2 <= 1/q_i <= b_i^2, so feasibility
  // reduces to max |v_i| <= b_i per axis.
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(0.2, 1.5);
  for (int trial = 0; trial < 20; ++trial) {
    MatrixXd pts(3, 3);
    pts.setZero();
    HRep box = cube_halfspaces(1.0);
    bool expect = true;
    for (int i = 0; i < 3; ++i) {
      pts(i, i) = u(rng);
      box.b(i) = box.b(i + 3) = u(rng);
      expect = expect && pts(i, i) <= box.b(i);
    }
    auto r = ellipsoid_between(pts, box);
    CHECK((r.status == Status::feasible) == expect);
    if (r.status == Status::feasible) CHECK(ellipsoid_residual(r.Q, pts, box) <= 1e-7);
  }
}

TEST_CASE("quantum_shrink_factor") {
  SUBCASE("octahedron with Pauli effects is quantum") {
    auto s = realized_states(with_ones(cross_vertices()));
    auto e = realized_effects(diamond_effects(MatrixXd::Identity(3, 3)));
    auto r = quantum_shrink_factor(s, e);
    CHECK(r.epsilon_star == 0.0);
    CHECK(r.trace.size() == 1);
    CHECK(r.monotone);
  }
  SUBCASE("cube states are grossly non-quantum") {
    auto s = realized_states(with_ones(cube_vertices()));
    auto e = dual_effects(s);
    CHECK_THROWS_WITH_AS(quantum_shrink_factor(s, e), doctest::Contains("grossly"), NumericalError);
  }
  SUBCASE("overlong states need a known shrink") {
    // Axis states at radius r with Pauli effects. After shrinking by f the
    // consistent space is the cube of half-side 1/f, and the octahedron of
    // radius f r fits a sphere inside it iff f^2 r <= 1.
    const double r0 = 1.05;
    auto s = realized_states(with_ones(r0 * cross_vertices()));
    auto e = realized_effects(diamond_effects(MatrixXd::Identity(3, 3)));
    auto r = quantum_shrink_factor(s, e);
    const double exact = 1.0 - 1.0 / std::sqrt(r0);
    CHECK(r.epsilon_star >= exact - 1e-9);
    CHECK(r.epsilon_star <= exact + 1e-4 + 1e-9);
    CHECK(r.monotone);
    CHECK(r.trace.size() > 5);
    const double f = 1 - r.epsilon_star;
    MatrixXd E = e.poly.vertices.transpose();
    E.bottomRows(3) *= f;
    CHECK(ellipsoid_residual(r.Q, f * s.poly.vertices, dual_states(E).poly.facets) <= 1e-7);
  }
}
