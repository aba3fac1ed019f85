#include <random>

#include "doctest.h"
#include "gpt/qp.hpp"
#include "gpt/wlra.hpp"

using namespace gpt;

namespace {

double objective(const qp::Problem& p, const VectorXd& x) { return 0.5 * x.dot(p.G * x) + p.g.dot(x); }

bool feasible(const qp::Problem& p, const VectorXd& x, double tol) {
  if (p.Aeq.rows() > 0 && (p.Aeq * x - p.beq).cwiseAbs().maxCoeff() > tol) return false;
  const VectorXd cx = p.C * x;
  return ((cx - p.lo).array() >= -tol).all() && ((p.hi - cx).array() >= -tol).all();
}

// Largest lambda with x0 + lambda d feasible.
double ray_reach(const qp::Problem& p, const VectorXd& x0, const VectorXd& d) {
  const VectorXd c0 = p.C * x0, cd = p.C * d;
  double reach = qp::kInf;
  for (Index i = 0; i < p.C.rows(); ++i) {
    if (cd(i) > 0) reach = std::min(reach, (p.hi(i) - c0(i)) / cd(i));
    if (cd(i) < 0) reach = std::min(reach, (p.lo(i) - c0(i)) / cd(i));
  }
  return reach;
}

// Random strictly convex problem whose box constraints surround x0 and cut
// through the unconstrained minimizer.
qp::Problem random_problem(std::mt19937_64& rng, Index k, Index p, VectorXd& x0) {
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> u(0.05, 0.6);
  MatrixXd A = MatrixXd::NullaryExpr(k + 2, k, [&]() { return g(rng); });
  qp::Problem prob;
  prob.G = A.transpose() * A + 0.1 * MatrixXd::Identity(k, k);
  prob.g = VectorXd::NullaryExpr(k, [&]() { return 3.0 * g(rng); });
  prob.C = MatrixXd::NullaryExpr(p, k, [&]() { return g(rng); });
  x0 = VectorXd::NullaryExpr(k, [&]() { return 0.3 * g(rng); });
  const VectorXd cx = prob.C * x0;
  prob.lo = cx - VectorXd::NullaryExpr(p, [&]() { return u(rng); });
  prob.hi = cx + VectorXd::NullaryExpr(p, [&]() { return u(rng); });
  prob.Aeq.resize(0, k);
  prob.beq.resize(0);
  return prob;
}

}  // namespace

TEST_CASE("inactive constraints give the least-squares solution") {
  qp::Problem p;
  p.G = (MatrixXd(2, 2) << 2, 0.5, 0.5, 1).finished();
  p.g = Eigen::Vector2d(-1, -1);
  p.C = MatrixXd::Identity(2, 2);
  p.lo = Eigen::Vector2d(-10, -10);
  p.hi = Eigen::Vector2d(10, 10);
  p.Aeq.resize(0, 2);
  p.beq.resize(0);
  auto s = qp::solve(p);
  const VectorXd ls = p.G.ldlt().solve(-p.g);
  CHECK((s.x - ls).norm() < 1e-14);
  CHECK(s.mu_lo.isZero(0.0));
  CHECK(s.mu_hi.isZero(0.0));
}

TEST_CASE("one-dimensional projection onto an upper bound") {
  MatrixXd E(1, 1);
  E << 1.0;
  VectorXd f(1), sigma(1);
  f << 1.2;
  sigma << 1.0;
  Eigen::Matrix<bool, Eigen::Dynamic, 1> mask(1);
  mask << true;
  auto s = wlra::solve_row_qp(E, f, sigma, mask, {});
  CHECK(s(0) == doctest::Approx(1.0).epsilon(1e-14));
  f << -0.3;
  CHECK(std::abs(wlra::solve_row_qp(E, f, sigma, mask, {})(0)) < 1e-14);
}

TEST_CASE("equality constraints") {
  qp::Problem p;
  p.G = MatrixXd::Identity(3, 3);
  p.g = VectorXd::Zero(3);
  p.Aeq = (MatrixXd(1, 3) << 1, 1, 1).finished();
  p.beq = VectorXd::Constant(1, 3.0);
  p.C.resize(0, 3);
  p.lo.resize(0);
  p.hi.resize(0);
  auto s = qp::solve(p);
  CHECK((s.x - VectorXd::Ones(3)).norm() < 1e-14);
  CHECK(s.lambda_eq(0) == doctest::Approx(1.0));
  CHECK(qp::kkt_residuals(p, s).max() < 1e-12);

  // A repeated, consistent equality is tolerated.
  p.Aeq = (MatrixXd(2, 3) << 1, 1, 1, 2, 2, 2).finished();
  p.beq = Eigen::Vector2d(3, 6);
  CHECK((qp::solve(p).x - VectorXd::Ones(3)).norm() < 1e-12);
  p.beq = Eigen::Vector2d(3, 5);
  CHECK_THROWS_AS(qp::solve(p), NumericalError);
}

TEST_CASE("infeasible and malformed problems") {
  qp::Problem p;
  p.G = MatrixXd::Identity(2, 2);
  p.g = VectorXd::Zero(2);
  p.Aeq.resize(0, 2);
  p.beq.resize(0);
  p.C = (MatrixXd(2, 2) << 1, 0, -1, 0).finished();
  p.lo = Eigen::Vector2d(1, 0);
  p.hi = Eigen::Vector2d(2, 0.5);
  // x0 >= 1 and -x0 >= 0 cannot both hold.
  CHECK_THROWS_AS(qp::solve(p), NumericalError);

  p.lo = Eigen::Vector2d(1, -qp::kInf);
  p.hi = Eigen::Vector2d(qp::kInf, qp::kInf);
  auto s = qp::solve(p);
  CHECK(s.x(0) == doctest::Approx(1.0));
  CHECK(s.mu_lo(0) == doctest::Approx(1.0));

  p.G(1, 1) = -1.0;
  CHECK_THROWS_AS(qp::solve(p), NumericalError);
  p.G = MatrixXd::Identity(2, 2);
  p.lo.resize(1);
  CHECK_THROWS_AS(qp::solve(p), ValidationError);
}

TEST_CASE("random instances beat every sampled feasible point") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int inst = 0; inst < 20; ++inst) {
    const Index k = 2 + inst % 5;
    VectorXd x0;
    auto p = random_problem(rng, k, 3 * k + inst, x0);
    auto sol = qp::solve(p);
    REQUIRE(feasible(p, sol.x, 1e-9));
    const auto kkt = qp::kkt_residuals(p, sol);
    CHECK(kkt.max() < 1e-9);
    const double best = objective(p, sol.x);
    // Feasible samples along rays from the strictly interior x0; every other
    // ray aims at a perturbation of the reported optimum and samples near its end.
    for (int t = 0; t < 10000; ++t) {
      VectorXd target = sol.x + 0.05 * VectorXd::NullaryExpr(k, [&]() { return u(rng); });
      if (t % 2 == 0) target = x0 + VectorXd::NullaryExpr(k, [&]() { return u(rng); });
      const double reach = ray_reach(p, x0, target - x0);
      const double lam = (t % 2 == 0 ? 0.5 * (u(rng) + 1.0) : 0.95 + 0.025 * (u(rng) + 1.0)) * reach;
      const VectorXd x = x0 + lam * (target - x0);
      REQUIRE(feasible(p, x, 1e-12));
      CHECK(objective(p, x) >= best - 1e-10);
    }
  }
}

TEST_CASE("degenerate duplicate constraints") {
  qp::Problem p;
  p.G = MatrixXd::Identity(2, 2);
  p.g = Eigen::Vector2d(-2, -2);
  p.Aeq.resize(0, 2);
  p.beq.resize(0);
  p.C = (MatrixXd(3, 2) << 1, 0, 1, 0, 0, 1).finished();
  p.lo = VectorXd::Zero(3);
  p.hi = VectorXd::Ones(3);
  auto s = qp::solve(p);
  CHECK((s.x - Eigen::Vector2d(1, 1)).norm() < 1e-12);
  CHECK(qp::kkt_residuals(p, s).max() < 1e-12);
}
