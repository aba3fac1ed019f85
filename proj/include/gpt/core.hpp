#pragma once

// Domain types and elementary GPT algebra.
//
// Conventions: a state is a k-vector whose leading component is 1; an effect is
// a k-vector paired with states by the Euclidean inner product. The unit effect
// is (1, 0, ..., 0). For a qubit, projective effects are (1/2, n/2): effect
// vectors equal Bloch vectors with Q = e . sigma, which is half the usual
// quantum-information normalization.

#include <cstddef>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace gpt {

template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using MaskMatrix = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;

// Tolerance for "probability in [0,1]" on fitted quantities.
inline constexpr double kProbabilityTol = 1e-9;

// Input or configuration is malformed. CLI exit code 2.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A numerical routine failed or its preconditions are numerically violated.
// CLI exit code 3.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

template <typename Scalar = double>
class GptState {
 public:
  explicit GptState(Vec<Scalar> components) : c_(std::move(components)) {
    if (c_.size() < 2) throw ValidationError("state vector needs at least 2 components");
    if (c_(0) != Scalar(1)) throw ValidationError("state vector must have leading component 1");
  }

  // Builds (1, bloch...).
  static GptState from_bloch(const Eigen::Ref<const Vec<Scalar>>& bloch) {
    Vec<Scalar> c(bloch.size() + 1);
    c << Scalar(1), bloch;
    return GptState(std::move(c));
  }

  const Vec<Scalar>& components() const { return c_; }
  auto bloch() const { return c_.tail(c_.size() - 1); }
  Index dim() const { return c_.size(); }

 private:
  Vec<Scalar> c_;
};

template <typename Scalar = double>
class GptEffect {
 public:
  explicit GptEffect(Vec<Scalar> components) : c_(std::move(components)) {}

  static GptEffect unit(Index k) { return GptEffect(Vec<Scalar>::Unit(k, 0)); }

  const Vec<Scalar>& components() const { return c_; }
  auto bloch() const { return c_.tail(c_.size() - 1); }
  Index dim() const { return c_.size(); }

  friend bool operator==(const GptEffect& a, const GptEffect& b) { return a.c_ == b.c_; }

 private:
  Vec<Scalar> c_;
};

using StateVector = GptState<double>;
using EffectVector = GptEffect<double>;

// Inner product s . e, unclamped.
template <typename DerivedS, typename DerivedE>
typename DerivedS::Scalar probability(const Eigen::MatrixBase<DerivedS>& s,
                                      const Eigen::MatrixBase<DerivedE>& e) {
  if (s.size() != e.size())
    throw ValidationError("state/effect length mismatch: " + std::to_string(s.size()) + " vs " +
                          std::to_string(e.size()));
  return s.dot(e);
}

template <typename Scalar>
Scalar probability(const GptState<Scalar>& s, const GptEffect<Scalar>& e) {
  return probability(s.components(), e.components());
}

// u - e.
template <typename Scalar>
GptEffect<Scalar> complement_effect(const GptEffect<Scalar>& e) {
  Vec<Scalar> c = -e.components();
  c(0) += Scalar(1);
  return GptEffect<Scalar>(std::move(c));
}

// Rank-bounded probability table D with a leading unit column.
class ProbabilityMatrix {
 public:
  ProbabilityMatrix(MatrixXd entries, Index rank_bound);

  const MatrixXd& entries() const { return d_; }
  Index rank_bound() const { return k_; }
  Index rows() const { return d_.rows(); }
  Index cols() const { return d_.cols(); }

 private:
  MatrixXd d_;
  Index k_;
};

// Numerical rank with singular values below rel_tol * sigma_max treated as zero.
Index numerical_rank(const MatrixXd& m, double rel_tol = 1e-8);

// Measured outcome-0 frequencies F with per-cell uncertainties. Cells with
// mask == false are unmeasured and carry zero weight in every fit.
struct FrequencyMatrix {
  MatrixXd values;
  MatrixXd sigmas;
  MaskMatrix mask;
  std::set<Index> exact_cols{0};

  Index rows() const { return values.rows(); }
  Index cols() const { return values.cols(); }
  bool is_exact(Index j) const { return exact_cols.contains(j); }

  // Measured cells, counting exact ones.
  Index measured_count() const;
  // Measured cells outside exact columns.
  Index measured_fit_count() const;

  // Throws ValidationError on shape mismatch, values outside [0,1], sigma <= 0
  // on a measured non-exact cell, or an exact column that is not all ones.
  void validate() const;
};

// D = S E with S m x k (rows are states) and E k x n (columns are effects).
struct GptModel {
  MatrixXd states;
  MatrixXd effects;

  Index rank() const { return states.cols(); }
  MatrixXd probabilities() const { return states * effects; }
};

struct ValidationReport {
  struct Cell {
    Index row;
    Index col;
    double value;
  };
  std::vector<Cell> out_of_range;
  bool states_normalized = true;  // column 0 of S is all ones
  bool unit_effect_first = true;  // column 0 of E is (1,0,...,0)

  bool valid() const { return out_of_range.empty() && states_normalized && unit_effect_first; }
};

ValidationReport validate_model(const GptModel& model, double tol = kProbabilityTol);

}  // namespace gpt
