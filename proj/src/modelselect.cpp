#include "gpt/modelselect.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace gpt::modelselect {

namespace {

constexpr double kEps = 1e-16;
constexpr int kMaxTerms = 100000;

double lower_series(double a, double x) {
  double term = 1.0 / a, sum = term;
  for (int n = 1; n < kMaxTerms; ++n) {
    term *= x / (a + n);
    sum += term;
    if (std::abs(term) < std::abs(sum) * kEps) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Modified Lentz evaluation of the continued fraction for Q(a, x).
double upper_fraction(double a, double x) {
  constexpr double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < kMaxTerms; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < kEps) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

void check_gamma_args(double a, double x) {
  if (!(a > 0.0) || !(x >= 0.0)) throw ValidationError("incomplete gamma needs a > 0 and x >= 0");
}

double chi2_log_density(double dof, double x) {
  const double a = 0.5 * dof;
  return (a - 1.0) * std::log(x) - 0.5 * x - a * std::log(2.0) - std::lgamma(a);
}

double log_sum_exp(const std::vector<double>& v) {
  const double top = *std::max_element(v.begin(), v.end());
  double s = 0.0;
  for (double x : v) s += std::exp(x - top);
  return top + std::log(s);
}

std::vector<double> log_weights(const std::vector<double>& scores) {
  if (scores.empty()) throw ValidationError("aic weights need at least one score");
  const double best = *std::min_element(scores.begin(), scores.end());
  std::vector<double> lw(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) lw[i] = -0.5 * (scores[i] - best);
  const double norm = log_sum_exp(lw);
  for (double& x : lw) x -= norm;
  return lw;
}

}  // namespace

double regularized_lower_gamma(double a, double x) {
  check_gamma_args(a, x);
  if (x == 0.0) return 0.0;
  if (x < a + 1.0) return lower_series(a, x);
  return 1.0 - upper_fraction(a, x);
}

double regularized_upper_gamma(double a, double x) {
  check_gamma_args(a, x);
  if (x == 0.0) return 1.0;
  if (x < a + 1.0) return 1.0 - lower_series(a, x);
  return upper_fraction(a, x);
}

double chi2_quantile(double dof, double q) {
  if (!(dof > 0.0)) throw ValidationError("chi2_quantile needs dof > 0");
  if (!(q > 0.0 && q < 1.0)) throw ValidationError("chi2_quantile needs q in (0,1)");
  const double a = 0.5 * dof;
  // Work with whichever tail is smaller so the residual keeps its precision.
  const bool upper = q > 0.5;
  const double target = upper ? 1.0 - q : q;
  auto residual = [&](double x) {
    return upper ? regularized_upper_gamma(a, 0.5 * x) - target
                 : regularized_lower_gamma(a, 0.5 * x) - target;
  };

  // Bracket: residual is increasing in x for the lower tail, decreasing for the upper.
  double lo = 0.0, hi = std::max(1.0, dof);
  auto below = [&](double x) { return upper ? residual(x) > 0.0 : residual(x) < 0.0; };
  while (below(hi)) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e12) throw NumericalError("chi2_quantile failed to bracket");
  }

  double x = 0.5 * (lo + hi);
  // Newton on the bracket, falling back to bisection when a step leaves it.
  for (int it = 0; it < 200; ++it) {
    const double r = residual(x);
    if (upper ? r > 0.0 : r < 0.0)
      lo = x;
    else
      hi = x;
    const double dens = std::exp(chi2_log_density(dof, x));
    double next = x - (upper ? -r : r) / dens;
    if (!(next > lo && next < hi) || !std::isfinite(next)) next = 0.5 * (lo + hi);
    if (std::abs(next - x) <= 1e-14 * std::max(1.0, x) || hi - lo <= 1e-14 * std::max(1.0, x)) {
      x = next;
      break;
    }
    x = next;
  }
  return x;
}

std::pair<double, double> chi2_interval(double dof, double level) {
  if (!(level > 0.0 && level < 1.0)) throw ValidationError("interval level must be in (0,1)");
  const double tail = 0.5 * (1.0 - level);
  return {chi2_quantile(dof, tail), chi2_quantile(dof, 1.0 - tail)};
}

double parameter_count(Index k, Index m, Index n) {
  return static_cast<double>(k) * static_cast<double>(m + n - k);
}

double aic_score(double chi2, Index k, Index m, Index n) { return chi2 + 2.0 * parameter_count(k, m, n); }

std::vector<double> aic_weights(const std::vector<double>& scores) {
  auto lw = log_weights(scores);
  for (double& x : lw) x = std::exp(x);
  return lw;
}

std::vector<double> aic_log10_weights(const std::vector<double>& scores) {
  auto lw = log_weights(scores);
  for (double& x : lw) x /= std::log(10.0);
  return lw;
}

RankReport rank_report(const FrequencyMatrix& f, const std::vector<Index>& ranks,
                       const std::vector<double>& chi2s, const std::vector<bool>& converged) {
  if (ranks.empty()) throw ValidationError("rank range is empty");
  if (chi2s.size() != ranks.size() || (!converged.empty() && converged.size() != ranks.size()))
    throw ValidationError("rank report: one chi-square per rank required");
  RankReport rep;
  rep.m = f.rows();
  rep.n = f.cols();
  rep.measured_cells = f.measured_count();
  const auto measured = static_cast<double>(rep.measured_cells);

  std::vector<double> scores;
  std::vector<std::size_t> scored;
  for (std::size_t t = 0; t < ranks.size(); ++t) {
    RankCandidate c;
    c.k = ranks[t];
    c.chi2 = chi2s[t];
    c.converged = converged.empty() ? true : converged[t];
    c.r_k = parameter_count(c.k, rep.m, rep.n);
    c.dof = measured - c.r_k;
    c.aic = aic_score(c.chi2, c.k, rep.m, rep.n);
    c.aicc_caveat = c.r_k > 0.4 * measured;
    c.identifiable = c.dof >= 1.0;
    if (c.identifiable) {
      std::tie(c.lo, c.hi) = chi2_interval(c.dof, 0.99);
      c.outside_interval = c.chi2 < c.lo || c.chi2 > c.hi;
      c.underfit = c.chi2 > c.hi;
      scores.push_back(c.aic);
      scored.push_back(t);
    } else {
      c.weight = 0.0;
      c.log10_weight = -std::numeric_limits<double>::infinity();
    }
    rep.candidates.push_back(c);
  }
  if (scores.empty()) throw ValidationError("no candidate rank leaves positive degrees of freedom");

  const auto w = aic_weights(scores);
  const auto lw = aic_log10_weights(scores);
  const double best = *std::min_element(scores.begin(), scores.end());
  std::size_t arg = scored.front();
  for (std::size_t s = 0; s < scored.size(); ++s) {
    auto& c = rep.candidates[scored[s]];
    c.delta = c.aic - best;
    c.weight = w[s];
    c.log10_weight = lw[s];
    if (c.weight > rep.candidates[arg].weight) arg = scored[s];
  }
  rep.selected_rank = rep.candidates[arg].k;
  return rep;
}

RankReport select_rank(const FrequencyMatrix& f, const std::vector<Index>& ranks,
                       const wlra::FitOptions& base, std::vector<wlra::FitResult>* fits) {
  if (ranks.empty()) throw ValidationError("rank range is empty");
  std::vector<double> chi2s;
  std::vector<bool> conv;
  if (fits) fits->clear();
  for (Index k : ranks) {
    wlra::FitOptions opts = base;
    opts.rank = k;
    auto res = wlra::fit_rank_k(f, opts);
    chi2s.push_back(res.chi2);
    conv.push_back(res.converged);
    if (fits) fits->push_back(std::move(res));
  }
  return rank_report(f, ranks, chi2s, conv);
}

}  // namespace gpt::modelselect
