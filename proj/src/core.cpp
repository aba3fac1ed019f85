#include "gpt/core.hpp"

#include <cmath>

#include <Eigen/SVD>

namespace gpt {

ProbabilityMatrix::ProbabilityMatrix(MatrixXd entries, Index rank_bound)
    : d_(std::move(entries)), k_(rank_bound) {
  if (k_ < 1) throw ValidationError("rank bound must be at least 1");
  if (d_.cols() < 1 || d_.rows() < 1) throw ValidationError("probability matrix is empty");
  if ((d_.array() < 0.0).any() || (d_.array() > 1.0).any())
    throw ValidationError("probability matrix has entries outside [0,1]");
  if ((d_.col(0).array() != 1.0).any())
    throw ValidationError("probability matrix column 0 must be the unit column");
  if (numerical_rank(d_) > k_)
    throw ValidationError("probability matrix rank exceeds bound " + std::to_string(k_));
}

Index numerical_rank(const MatrixXd& m, double rel_tol) {
  if (m.size() == 0) return 0;
  Eigen::BDCSVD<MatrixXd> svd(m);
  const VectorXd& sv = svd.singularValues();
  if (sv.size() == 0 || sv(0) == 0.0) return 0;
  Index r = 0;
  for (Index i = 0; i < sv.size(); ++i)
    if (sv(i) > rel_tol * sv(0)) ++r;
  return r;
}

Index FrequencyMatrix::measured_count() const { return mask.count(); }

Index FrequencyMatrix::measured_fit_count() const {
  Index n = 0;
  for (Index j = 0; j < cols(); ++j)
    if (!is_exact(j)) n += mask.col(j).count();
  return n;
}

void FrequencyMatrix::validate() const {
  const Index m = values.rows(), n = values.cols();
  if (m < 1 || n < 1) throw ValidationError("frequency matrix is empty");
  if (sigmas.rows() != m || sigmas.cols() != n || mask.rows() != m || mask.cols() != n)
    throw ValidationError("frequency matrix: values/sigmas/mask shape mismatch");
  for (Index j : exact_cols)
    if (j < 0 || j >= n) throw ValidationError("exact column index out of range");
  for (Index j = 0; j < n; ++j) {
    for (Index i = 0; i < m; ++i) {
      if (is_exact(j)) {
        if (!mask(i, j) || values(i, j) != 1.0)
          throw ValidationError("exact column " + std::to_string(j) +
                                " must be fully measured and identically 1");
        continue;
      }
      if (!mask(i, j)) continue;
      const double f = values(i, j), s = sigmas(i, j);
      if (!std::isfinite(f) || f < 0.0 || f > 1.0)
        throw ValidationError("frequency outside [0,1] at (" + std::to_string(i) + "," +
                              std::to_string(j) + ")");
      if (!std::isfinite(s) || s <= 0.0)
        throw ValidationError("non-positive uncertainty at (" + std::to_string(i) + "," +
                              std::to_string(j) + ")");
    }
  }
}

ValidationReport validate_model(const GptModel& model, double tol) {
  ValidationReport rep;
  const MatrixXd d = model.probabilities();
  for (Index j = 0; j < d.cols(); ++j)
    for (Index i = 0; i < d.rows(); ++i)
      if (d(i, j) < -tol || d(i, j) > 1.0 + tol) rep.out_of_range.push_back({i, j, d(i, j)});
  if (model.states.cols() > 0) rep.states_normalized = (model.states.col(0).array() == 1.0).all();
  if (model.effects.cols() > 0 && model.effects.rows() > 0) {
    rep.unit_effect_first = model.effects(0, 0) == 1.0 &&
                            (model.effects.col(0).tail(model.effects.rows() - 1).array() == 0.0).all();
  }
  return rep;
}

}  // namespace gpt
