#pragma once

// Weighted low-rank approximation with box constraints.
//
// Finds D = S E of rank k minimizing the weighted chi-square against a
// FrequencyMatrix subject to 0 <= D_ij <= 1 on every cell (measured or not)
// and D_ij = 1 on exact unit columns. Alternates between the S-step and the
// E-step; with the other factor fixed each step splits into independent
// k-dimensional QPs, one per row of S or column of E.

#include <cstdint>
#include <set>
#include <vector>

#include "gpt/core.hpp"

namespace gpt::wlra {

enum class InitStrategy {
  svd,     // top singular vectors of the mean-imputed, column-centred data
  random,  // uniform noise around the column means
};

struct FitOptions {
  Index rank = 4;
  int max_iterations = 5000;
  double delta_chi2_tol = 1e-6;
  int restarts = 5;
  double qp_tolerance = 1e-10;
  InitStrategy init_strategy = InitStrategy::svd;
  std::uint64_t seed = 0;
  bool record_trace = false;

  void validate() const;
};

struct FitResult {
  MatrixXd S;  // m x k, column 0 all ones
  MatrixXd E;  // k x n, column 0 is (1,0,...,0)
  double chi2 = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> per_restart_chi2;
  Index best_restart = 0;
  // Rows/columns that had fewer measured cells than free parameters and were
  // ridge-regularized.
  Index underdetermined = 0;
  // Iterations at which chi-square rose by more than rounding slack.
  int monotonicity_violations = 0;
  // Per-iteration chi-square of the best restart (record_trace only).
  std::vector<double> trace;

  MatrixXd probabilities() const { return S * E; }
};

// Sum over measured non-exact cells of ((F - D) / sigma)^2. Throws
// ValidationError when D departs from F on an exact column by more than 1e-9.
double chi2(const FrequencyMatrix& f, const MatrixXd& d);

FitResult fit_rank_k(const FrequencyMatrix& f, const FitOptions& opts);

// One state row given fixed effects: minimizes sum_j w_j (s.e_j - f_j)^2 over
// measured non-exact columns, with s.e_j = f_j on measured exact columns and
// 0 <= s.e_j <= 1 on all others.
VectorXd solve_row_qp(const MatrixXd& E, const VectorXd& f_row, const VectorXd& sigma_row,
                      const Eigen::Matrix<bool, Eigen::Dynamic, 1>& mask_row,
                      const std::set<Index>& exact_cols, double tol = 1e-10);

// One effect column given fixed states, with 0 <= s_i.e <= 1 for every row.
VectorXd solve_col_qp(const MatrixXd& S, const VectorXd& f_col, const VectorXd& sigma_col,
                      const Eigen::Matrix<bool, Eigen::Dynamic, 1>& mask_col, double tol = 1e-10);

}  // namespace gpt::wlra
