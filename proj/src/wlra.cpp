#include "gpt/wlra.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include <Eigen/SVD>

#include "gpt/qp.hpp"

namespace gpt::wlra {

namespace {

using BoolVec = Eigen::Matrix<bool, Eigen::Dynamic, 1>;

constexpr double kRidge = 1e-12;

// Factorizes G, adding a ridge when the subproblem is underdetermined or G is
// numerically singular. Returns true when a ridge was needed.
bool factorize(MatrixXd& G, Eigen::LLT<MatrixXd>& llt, bool underdetermined) {
  const Index k = G.rows();
  const double scale = std::max(G.trace() / static_cast<double>(k), 1.0);
  bool ridged = false;
  if (underdetermined) {
    G.diagonal().array() += kRidge * scale;
    ridged = true;
  }
  llt.compute(G);
  double ridge = kRidge * scale;
  while (llt.info() != Eigen::Success) {
    G.diagonal().array() += ridge;
    ridge *= 10.0;
    ridged = true;
    if (ridge > 1e-4 * scale) throw NumericalError("fit subproblem Hessian is singular");
    llt.compute(G);
  }
  return ridged;
}

class AlternatingFit {
 public:
  AlternatingFit(const FrequencyMatrix& f, const FitOptions& opts) : f_(f), opts_(opts) {
    m_ = f.rows();
    n_ = f.cols();
    k_ = opts.rank;
    weights_ = MatrixXd::Zero(m_, n_);
    for (Index j = 0; j < n_; ++j) {
      if (f.is_exact(j)) continue;
      for (Index i = 0; i < m_; ++i)
        if (f.mask(i, j)) weights_(i, j) = 1.0 / (f.sigmas(i, j) * f.sigmas(i, j));
    }
    wf_ = weights_.cwiseProduct(f.values);
    for (Index j = 0; j < n_; ++j)
      if (f.is_exact(j)) exact_.push_back(j);
      else free_cols_.push_back(j);
    row_counts_.resize(m_);
    for (Index i = 0; i < m_; ++i) row_counts_(i) = (weights_.row(i).array() > 0.0).count();
    col_counts_.resize(n_);
    for (Index j = 0; j < n_; ++j) col_counts_(j) = (weights_.col(j).array() > 0.0).count();
  }

  MatrixXd initial_effects(int restart) const {
    MatrixXd imputed = f_.values;
    for (Index j = 0; j < n_; ++j)
      for (Index i = 0; i < m_; ++i)
        if (!f_.mask(i, j)) imputed(i, j) = 0.5;
    const Eigen::RowVectorXd mean = imputed.colwise().mean();

    MatrixXd E = MatrixXd::Zero(k_, n_);
    E.row(0) = mean;
    std::mt19937_64 rng(opts_.seed * 0x9e3779b97f4a7c15ULL + static_cast<std::uint64_t>(restart));
    std::uniform_real_distribution<double> noise(-0.1, 0.1);

    Index filled = 1;
    if (opts_.init_strategy == InitStrategy::svd && k_ > 1) {
      const MatrixXd centred = imputed.rowwise() - mean;
      Eigen::BDCSVD<MatrixXd> svd(centred, Eigen::ComputeThinV);
      const VectorXd& sv = svd.singularValues();
      const double scale = 1.0 / std::sqrt(static_cast<double>(m_));
      for (Index r = 0; r < std::min<Index>(k_ - 1, sv.size()); ++r) {
        if (sv(r) <= 1e-12 * std::max(sv(0), 1e-300)) break;
        VectorXd v = svd.matrixV().col(r);
        for (Index j = 0; j < n_; ++j)
          if (v(j) != 0.0) {
            if (v(j) < 0.0) v = -v;
            break;
          }
        E.row(filled++) = sv(r) * scale * v.transpose();
      }
    }
    for (Index r = filled; r < k_; ++r)
      for (Index j = 0; j < n_; ++j) E(r, j) = 5.0 * noise(rng);
    if (restart > 0)
      for (Index r = 1; r < k_; ++r)
        for (Index j = 0; j < n_; ++j) E(r, j) += noise(rng);
    for (Index j : exact_) {
      E.col(j).setZero();
      E(0, j) = 1.0;
    }
    return E;
  }

  MatrixXd s_step(const MatrixXd& E, const MatrixXd& S_prev) {
    MatrixXd S(m_, k_);
    MatrixXd C(static_cast<Index>(free_cols_.size()), k_);
    for (std::size_t c = 0; c < free_cols_.size(); ++c)
      C.row(static_cast<Index>(c)) = E.col(free_cols_[c]).transpose();
    const VectorXd lo = VectorXd::Zero(C.rows());
    const VectorXd hi = VectorXd::Ones(C.rows());
    MatrixXd Aeq(static_cast<Index>(exact_.size()), k_);
    for (std::size_t c = 0; c < exact_.size(); ++c)
      Aeq.row(static_cast<Index>(c)) = E.col(exact_[c]).transpose();
    VectorXd beq(Aeq.rows());
    const bool unit_pinned = is_unit_pinned(E);

    Eigen::LLT<MatrixXd> llt;
    for (Index i = 0; i < m_; ++i) {
      MatrixXd G = E * weights_.row(i).asDiagonal() * E.transpose();
      const VectorXd g = -(E * wf_.row(i).transpose());
      if (factorize(G, llt, row_counts_(i) + Aeq.rows() < k_)) ++regularized_;
      for (std::size_t c = 0; c < exact_.size(); ++c)
        beq(static_cast<Index>(c)) = f_.values(i, exact_[c]);
      auto sol = qp::solve(llt, G, g, Aeq, beq, C, lo, hi, opts_.qp_tolerance);
      S.row(i) = sol.x.transpose();
      if (unit_pinned) S(i, 0) = 1.0;
    }
    (void)S_prev;
    return S;
  }

  MatrixXd e_step(const MatrixXd& S, const MatrixXd& E_prev) {
    MatrixXd E = E_prev;
    const MatrixXd Aeq(0, k_);
    const VectorXd beq(0);
    const VectorXd lo = VectorXd::Zero(m_);
    const VectorXd hi = VectorXd::Ones(m_);
    Eigen::LLT<MatrixXd> llt;
    for (Index j : free_cols_) {
      MatrixXd G = S.transpose() * weights_.col(j).asDiagonal() * S;
      const VectorXd g = -(S.transpose() * wf_.col(j));
      if (factorize(G, llt, col_counts_(j) < k_)) ++regularized_;
      auto sol = qp::solve(llt, G, g, Aeq, beq, S, lo, hi, opts_.qp_tolerance);
      E.col(j) = sol.x;
    }
    return E;
  }

  FitResult run_restart(int restart) {
    FitResult res;
    MatrixXd E = initial_effects(restart);
    MatrixXd S = s_step(E, MatrixXd());
    double prev = chi2(f_, S * E);
    if (opts_.record_trace) res.trace.push_back(prev);
    for (int it = 1; it <= opts_.max_iterations; ++it) {
      regularized_ = 0;
      E = e_step(S, E);
      S = s_step(E, S);
      const double cur = chi2(f_, S * E);
      if (opts_.record_trace) res.trace.push_back(cur);
      if (cur > prev + 1e-9 * std::max(1.0, prev)) ++res.monotonicity_violations;
      res.iterations = it;
      const double drop = prev - cur;
      prev = cur;
      if (drop < opts_.delta_chi2_tol) {
        res.converged = true;
        break;
      }
    }
    res.S = std::move(S);
    res.E = std::move(E);
    res.chi2 = prev;
    res.underdetermined = regularized_;
    return res;
  }

 private:
  bool is_unit_pinned(const MatrixXd& E) const {
    if (exact_.empty()) return false;
    const Index j = exact_.front();
    return E(0, j) == 1.0 && (E.col(j).tail(k_ - 1).array() == 0.0).all();
  }

  const FrequencyMatrix& f_;
  const FitOptions& opts_;
  Index m_ = 0, n_ = 0, k_ = 0;
  MatrixXd weights_;
  MatrixXd wf_;
  std::vector<Index> exact_;
  std::vector<Index> free_cols_;
  Eigen::VectorXi row_counts_;
  Eigen::VectorXi col_counts_;
  Index regularized_ = 0;
};

}  // namespace

void FitOptions::validate() const {
  if (rank < 1) throw ValidationError("fit rank must be >= 1");
  if (max_iterations < 1) throw ValidationError("max_iterations must be >= 1");
  if (!(delta_chi2_tol > 0.0) || !(qp_tolerance > 0.0))
    throw ValidationError("fit tolerances must be positive");
  if (restarts < 1) throw ValidationError("restarts must be >= 1");
}

double chi2(const FrequencyMatrix& f, const MatrixXd& d) {
  if (d.rows() != f.rows() || d.cols() != f.cols())
    throw ValidationError("chi2: matrix shape mismatch");
  double total = 0.0;
  for (Index j = 0; j < f.cols(); ++j) {
    const bool exact = f.is_exact(j);
    for (Index i = 0; i < f.rows(); ++i) {
      if (!f.mask(i, j)) continue;
      if (exact) {
        if (std::abs(d(i, j) - f.values(i, j)) > 1e-9)
          throw ValidationError("chi2 undefined: exact column " + std::to_string(j) +
                                " not reproduced at row " + std::to_string(i));
        continue;
      }
      const double r = (f.values(i, j) - d(i, j)) / f.sigmas(i, j);
      total += r * r;
    }
  }
  return total;
}

FitResult fit_rank_k(const FrequencyMatrix& f, const FitOptions& opts) {
  opts.validate();
  f.validate();
  if (f.exact_cols.empty()) throw ValidationError("fit needs an exact unit column");
  if (opts.rank > std::min(f.rows(), f.cols()))
    throw ValidationError("rank " + std::to_string(opts.rank) + " exceeds min(m,n)");

  AlternatingFit fit(f, opts);
  FitResult best;
  bool have = false;
  std::vector<double> per_restart;
  for (int r = 0; r < opts.restarts; ++r) {
    FitResult res = fit.run_restart(r);
    per_restart.push_back(res.chi2);
    if (!have || res.chi2 < best.chi2 - 1e-9) {
      best = std::move(res);
      best.best_restart = r;
      have = true;
    }
  }
  best.per_restart_chi2 = std::move(per_restart);
  return best;
}

VectorXd solve_row_qp(const MatrixXd& E, const VectorXd& f_row, const VectorXd& sigma_row,
                      const Eigen::Matrix<bool, Eigen::Dynamic, 1>& mask_row,
                      const std::set<Index>& exact_cols, double tol) {
  const Index k = E.rows(), n = E.cols();
  if (f_row.size() != n || sigma_row.size() != n || mask_row.size() != n)
    throw ValidationError("solve_row_qp: length mismatch");
  MatrixXd G = MatrixXd::Zero(k, k);
  VectorXd g = VectorXd::Zero(k);
  std::vector<Index> eq, box;
  Index measured = 0;
  for (Index j = 0; j < n; ++j) {
    if (exact_cols.contains(j)) {
      if (mask_row(j)) eq.push_back(j);
      continue;
    }
    box.push_back(j);
    if (!mask_row(j)) continue;
    const double w = 1.0 / (sigma_row(j) * sigma_row(j));
    G += w * E.col(j) * E.col(j).transpose();
    g -= w * f_row(j) * E.col(j);
    ++measured;
  }
  MatrixXd Aeq(static_cast<Index>(eq.size()), k);
  VectorXd beq(Aeq.rows());
  for (std::size_t c = 0; c < eq.size(); ++c) {
    Aeq.row(static_cast<Index>(c)) = E.col(eq[c]).transpose();
    beq(static_cast<Index>(c)) = f_row(eq[c]);
  }
  MatrixXd C(static_cast<Index>(box.size()), k);
  for (std::size_t c = 0; c < box.size(); ++c) C.row(static_cast<Index>(c)) = E.col(box[c]).transpose();
  Eigen::LLT<MatrixXd> llt;
  factorize(G, llt, measured + Aeq.rows() < k);
  return qp::solve(llt, G, g, Aeq, beq, C, VectorXd::Zero(C.rows()), VectorXd::Ones(C.rows()), tol).x;
}

VectorXd solve_col_qp(const MatrixXd& S, const VectorXd& f_col, const VectorXd& sigma_col,
                      const Eigen::Matrix<bool, Eigen::Dynamic, 1>& mask_col, double tol) {
  const Index m = S.rows(), k = S.cols();
  if (f_col.size() != m || sigma_col.size() != m || mask_col.size() != m)
    throw ValidationError("solve_col_qp: length mismatch");
  MatrixXd G = MatrixXd::Zero(k, k);
  VectorXd g = VectorXd::Zero(k);
  Index measured = 0;
  for (Index i = 0; i < m; ++i) {
    if (!mask_col(i)) continue;
    if (!(sigma_col(i) > 0.0)) throw ValidationError("solve_col_qp: sigma must be positive");
    const double w = 1.0 / (sigma_col(i) * sigma_col(i));
    G += w * S.row(i).transpose() * S.row(i);
    g -= w * f_col(i) * S.row(i).transpose();
    ++measured;
  }
  Eigen::LLT<MatrixXd> llt;
  factorize(G, llt, measured < k);
  return qp::solve(llt, G, g, MatrixXd(0, k), VectorXd(0), S, VectorXd::Zero(m), VectorXd::Ones(m), tol).x;
}

}  // namespace gpt::wlra
