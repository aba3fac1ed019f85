#pragma once

// Convex polytopes in low dimension: double-description conversion between
// vertex and halfspace form, volumes, and the GPT state/effect duals.

#include <string>

#include "gpt/core.hpp"

namespace gpt::polytope {

struct Tolerances {
  double zero = 1e-9;    // slack on unit-normalized incidence tests
  double dedupe = 1e-8;  // merge distance for vertices and halfspaces
};

// Input is affinely lower-dimensional.
class DegenerateError : public NumericalError {
 public:
  DegenerateError(const std::string& what, Index affine_dim)
      : NumericalError(what), affine_dim_(affine_dim) {}
  Index affine_dim() const { return affine_dim_; }

 private:
  Index affine_dim_;
};

class UnboundedError : public NumericalError {
 public:
  UnboundedError(const std::string& what, VectorXd direction)
      : NumericalError(what), direction_(std::move(direction)) {}
  const VectorXd& direction() const { return direction_; }

 private:
  VectorXd direction_;
};

// a_i . x <= b_i with |a_i| = 1.
struct HRep {
  MatrixXd A;
  VectorXd b;

  Index size() const { return A.rows(); }
};

// Both representations, minimal: vertices are the extreme points (one per
// row) and every halfspace supports a facet.
struct Polytope {
  Index dim = 0;
  MatrixXd vertices;
  HRep facets;

  Index num_vertices() const { return vertices.rows(); }
  Index num_facets() const { return facets.size(); }
};

// Affine hull dimension of the rows of `points`.
Index affine_dimension(const MatrixXd& points, double tol = 1e-9);

HRep facet_enumeration(const MatrixXd& points, const Tolerances& tol = {});
MatrixXd vertex_enumeration(const HRep& h, const Tolerances& tol = {});

// Hull of the rows of `points`; non-extreme rows are dropped.
Polytope from_vertices(const MatrixXd& points, const Tolerances& tol = {});
// Bounded intersection of halfspaces (rows need not be normalized or
// irredundant).
Polytope from_halfspaces(const MatrixXd& A, const VectorXd& b, const Tolerances& tol = {});

double volume(const Polytope& p, const Tolerances& tol = {});
bool contains(const Polytope& p, const VectorXd& x, double slack = 1e-9);
VectorXd vertex_centroid(const Polytope& p);

enum class Role { realized, consistent };

// States in the k-1 coordinates after the leading 1.
struct StateSpace {
  Polytope poly;
  Role role = Role::realized;
};

// Effects in all k coordinates.
struct EffectSpace {
  Polytope poly;
  Role role = Role::realized;
};

// Hull of the state rows of S (m x k, leading column of ones).
StateSpace realized_states(const MatrixXd& S, const Tolerances& tol = {});
// Hull of the effect columns of E (k x N).
EffectSpace realized_effects(const MatrixXd& E, const Tolerances& tol = {});

// {x : 0 <= (1,x).e <= 1 for every vertex e of E}.
StateSpace dual_states(const EffectSpace& E, const Tolerances& tol = {});
// Consistent states from an explicit effect list (columns), without first
// reducing the effects to their hull.
StateSpace dual_states(const MatrixXd& effects, const Tolerances& tol = {});
// {e : 0 <= (1,x).e <= 1 for every vertex x of S}.
EffectSpace dual_effects(const StateSpace& S, const Tolerances& tol = {});

}  // namespace gpt::polytope
