#pragma once

// Quantum-consistency test: the smallest shrink of the realized states and
// effects that lets an origin-centred ellipsoid (a linear image of the qubit
// Bloch ball) sit between the realized and the consistent state spaces.

#include <vector>

#include "gpt/polytope.hpp"

namespace gpt::qfit {

// Scales columns 1.. of S and rows 1.. of E by factor in (0, 1].
GptModel shrink_model(const GptModel& model, double factor);

enum class Status { feasible, infeasible, not_converged };

struct EllipsoidResult {
  Status status = Status::not_converged;
  MatrixXd Q;           // a feasible Q when status == feasible
  // Last iterate's t in: min t with v'Qv <= 1, a'Q^-1 a <= t b^2. The minimum
  // lies in [t_star - gap, t_star].
  double t_star = 0.0;
  double gap = 0.0;
  int newton_steps = 0;
};

// Decides whether some symmetric Q > 0 has v'Qv <= 1 for every row v of
// `points` and a'Q^-1 a <= b^2 for every halfspace (the ellipsoid
// {x : x'Qx <= 1} lies inside the polytope). Requires b > 0.
EllipsoidResult ellipsoid_between(const MatrixXd& points, const polytope::HRep& halfspaces,
                                  double feas_tol = 1e-8);

struct TraceEntry {
  double epsilon;
  bool feasible;
  double t_upper;  // bounds on min t at this epsilon
  double t_lower;
};

struct ShrinkResult {
  double epsilon_star = 0.0;
  MatrixXd Q;
  std::vector<TraceEntry> trace;  // in evaluation order
  // Feasibility and the t bounds are consistent with t* non-increasing in
  // epsilon across the whole trace.
  bool monotone = true;
};

// Bisection over epsilon in [0, max_epsilon]. Throws NumericalError when
// infeasible at max_epsilon or when the ellipsoid solver fails.
ShrinkResult quantum_shrink_factor(const polytope::StateSpace& s_real, const polytope::EffectSpace& e_real,
                                   double max_epsilon = 0.2, double tol = 1e-4);

// Largest violation of the two condition sets at Q, recomputed from scratch.
double ellipsoid_residual(const MatrixXd& Q, const MatrixXd& points, const polytope::HRep& halfspaces);

}  // namespace gpt::qfit
