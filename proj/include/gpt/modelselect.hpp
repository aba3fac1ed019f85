#pragma once

// Rank selection by chi-square goodness of fit and Akaike weights.

#include <utility>
#include <vector>

#include "gpt/core.hpp"
#include "gpt/wlra.hpp"

namespace gpt::modelselect {

// P(a, x) and Q(a, x) = 1 - P(a, x) for a > 0, x >= 0.
double regularized_lower_gamma(double a, double x);
double regularized_upper_gamma(double a, double x);

// x with P(dof/2, x/2) = q.
double chi2_quantile(double dof, double q);
// Central interval holding `level` of the chi-square mass.
std::pair<double, double> chi2_interval(double dof, double level = 0.99);

// r_k = k(m+n-k).
double parameter_count(Index k, Index m, Index n);
double aic_score(double chi2, Index k, Index m, Index n);

// Akaike weights exp(-delta/2) / sum, evaluated with log-sum-exp.
std::vector<double> aic_weights(const std::vector<double>& scores);
// log10 of the same weights; stays finite where the weights underflow.
std::vector<double> aic_log10_weights(const std::vector<double>& scores);

struct RankCandidate {
  Index k = 0;
  double chi2 = 0.0;
  double dof = 0.0;  // measured cells - r_k
  double lo = 0.0;   // central 99% interval
  double hi = 0.0;
  double r_k = 0.0;
  double aic = 0.0;
  double delta = 0.0;
  double weight = 0.0;
  double log10_weight = 0.0;
  bool identifiable = true;   // dof >= 1
  bool outside_interval = false;
  bool underfit = false;      // chi2 above the interval
  bool aicc_caveat = false;   // r_k > 0.4 x measured cells
  bool converged = true;
};

struct RankReport {
  Index m = 0;
  Index n = 0;
  Index measured_cells = 0;
  std::vector<RankCandidate> candidates;
  Index selected_rank = 0;
};

// Builds the report from chi-square values already computed for each rank.
RankReport rank_report(const FrequencyMatrix& f, const std::vector<Index>& ranks,
                       const std::vector<double>& chi2s, const std::vector<bool>& converged = {});

// Fits every rank in `ranks` and assembles the report. When `fits` is given it
// receives the fit for each rank in order.
RankReport select_rank(const FrequencyMatrix& f, const std::vector<Index>& ranks,
                       const wlra::FitOptions& base, std::vector<wlra::FitResult>* fits = nullptr);

}  // namespace gpt::modelselect
