#pragma once

// Dense strictly convex quadratic programs of small dimension:
//
//   minimize    1/2 x'Gx + g'x
//   subject to  Aeq x  = beq
//               lo <= C x <= hi      (row-wise, either side may be infinite)
//
// Solved with the Goldfarb-Idnani dual active-set method, which starts from
// the unconstrained minimizer and needs no feasible initial point.

#include <algorithm>
#include <limits>

#include "gpt/core.hpp"

namespace gpt::qp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct Problem {
  MatrixXd G;
  VectorXd g;
  MatrixXd Aeq;  // neq x k (may have zero rows)
  VectorXd beq;
  MatrixXd C;  // p x k
  VectorXd lo;
  VectorXd hi;
};

struct Solution {
  VectorXd x;
  VectorXd lambda_eq;  // multipliers of Aeq x = beq
  VectorXd mu_lo;      // >= 0, for C x >= lo
  VectorXd mu_hi;      // >= 0, for C x <= hi
  double objective = 0.0;
  int iterations = 0;
};

// Throws NumericalError if G is not positive definite, the constraints are
// infeasible, or the iteration cap is hit.
Solution solve(const Problem& problem, double tol = 1e-10);

// Same, with the Hessian given through a precomputed Cholesky factor and the
// constraint blocks passed by reference (avoids copies in hot loops).
Solution solve(const Eigen::LLT<MatrixXd>& G_llt, const MatrixXd& G, const VectorXd& g,
               const MatrixXd& Aeq, const VectorXd& beq, const MatrixXd& C, const VectorXd& lo,
               const VectorXd& hi, double tol = 1e-10);

struct KktResiduals {
  double stationarity = 0.0;
  double primal = 0.0;
  double dual = 0.0;
  double complementarity = 0.0;
  double max() const { return std::max({stationarity, primal, dual, complementarity}); }
};

// Residuals scaled by the magnitudes of G, g and the constraint rows.
KktResiduals kkt_residuals(const Problem& problem, const Solution& sol);

}  // namespace gpt::qp
