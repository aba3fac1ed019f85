#include "gpt/qp.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace gpt::qp {

namespace {

enum class Kind { eq, lower, upper };

struct Active {
  Kind kind;
  Index row;
  double sign;  // equality rows may be flipped so the step starts from s < 0
  double u;
};

class Solver {
 public:
  Solver(const Eigen::LLT<MatrixXd>& llt, const MatrixXd& G, const VectorXd& g, const MatrixXd& Aeq,
         const VectorXd& beq, const MatrixXd& C, const VectorXd& lo, const VectorXd& hi, double tol)
      : llt_(llt), G_(G), g_(g), Aeq_(Aeq), beq_(beq), C_(C), lo_(lo), hi_(hi), tol_(tol) {
    k_ = G.rows();
    row_norm_ = C_.rowwise().norm();
  }

  Solution run() {
    x_ = -llt_.solve(g_);
    for (Index i = 0; i < Aeq_.rows(); ++i) {
      double s = Aeq_.row(i).dot(x_) - beq_(i);
      const double sign = s > 0.0 ? -1.0 : 1.0;
      add({Kind::eq, i, sign, 0.0});
    }
    const int cap = 50 * static_cast<int>(C_.rows() + Aeq_.rows() + k_) + 100;
    for (;;) {
      if (++iterations_ > cap) throw NumericalError("QP iteration cap reached");
      Index worst = -1;
      Kind worst_kind = Kind::lower;
      double worst_val = -tol_;
      const VectorXd cx = C_ * x_;
      for (Index i = 0; i < C_.rows(); ++i) {
        const double nrm = row_norm_(i);
        if (nrm == 0.0) {
          if (lo_(i) > tol_ || hi_(i) < -tol_) throw NumericalError("QP infeasible: empty constraint row");
          continue;
        }
        if (std::isfinite(lo_(i))) {
          const double v = (cx(i) - lo_(i)) / nrm;
          if (v < worst_val && !is_active(Kind::lower, i)) {
            worst_val = v;
            worst = i;
            worst_kind = Kind::lower;
          }
        }
        if (std::isfinite(hi_(i))) {
          const double v = (hi_(i) - cx(i)) / nrm;
          if (v < worst_val && !is_active(Kind::upper, i)) {
            worst_val = v;
            worst = i;
            worst_kind = Kind::upper;
          }
        }
      }
      if (worst < 0) break;
      add({worst_kind, worst, 1.0, 0.0});
    }
    return finish();
  }

 private:
  VectorXd normal(const Active& a) const {
    switch (a.kind) {
      case Kind::eq:
        return a.sign * Aeq_.row(a.row).transpose();
      case Kind::lower:
        return C_.row(a.row).transpose();
      case Kind::upper:
        return -C_.row(a.row).transpose();
    }
    return {};
  }

  double rhs(const Active& a) const {
    switch (a.kind) {
      case Kind::eq:
        return a.sign * beq_(a.row);
      case Kind::lower:
        return lo_(a.row);
      case Kind::upper:
        return -hi_(a.row);
    }
    return 0.0;
  }

  bool is_active(Kind kind, Index row) const {
    return std::any_of(active_.begin(), active_.end(),
                       [&](const Active& a) { return a.kind == kind && a.row == row; });
  }

  // Brings constraint c into the active set, dropping blocking inequalities.
  void add(Active c) {
    const VectorXd np = normal(c);
    const double bp = rhs(c);
    const VectorXd ginv_np = llt_.solve(np);
    const double np_scale = std::max(np.dot(ginv_np), 1e-300);
    double u_new = 0.0;
    for (int guard = 0;; ++guard) {
      if (guard > 10 * static_cast<int>(k_ + active_.size()) + 100)
        throw NumericalError("QP failed to add a constraint");
      const auto q = static_cast<Index>(active_.size());
      VectorXd z = ginv_np;
      VectorXd r(q);
      if (q > 0) {
        MatrixXd N(k_, q);
        for (Index j = 0; j < q; ++j) N.col(j) = normal(active_[static_cast<std::size_t>(j)]);
        const MatrixXd ginv_N = llt_.solve(N);
        const MatrixXd M = N.transpose() * ginv_N;
        r = M.ldlt().solve(N.transpose() * ginv_np);
        z -= ginv_N * r;
      }
      const double s = np.dot(x_) - bp;
      double t1 = kInf;
      Index drop = -1;
      for (Index j = 0; j < q; ++j) {
        const auto& a = active_[static_cast<std::size_t>(j)];
        if (a.kind == Kind::eq || r(j) <= 1e-14) continue;
        const double t = a.u / r(j);
        if (t < t1) {
          t1 = t;
          drop = j;
        }
      }
      const double zn = z.dot(np);
      const bool primal_step = zn > 1e-12 * np_scale;
      double t2 = primal_step ? std::max(0.0, -s / zn) : kInf;

      if (c.kind == Kind::eq && !primal_step) {
        // Dependent equality: consistent iff already satisfied.
        if (std::abs(s) <= tol_ * std::max(1.0, std::abs(bp))) return;
        if (drop < 0) throw NumericalError("QP infeasible: inconsistent equality constraints");
      }
      const double t = std::min(t1, t2);
      if (!std::isfinite(t)) throw NumericalError("QP infeasible");

      if (primal_step) x_ += t * z;
      for (Index j = 0; j < q; ++j) {
        auto& a = active_[static_cast<std::size_t>(j)];
        a.u -= t * r(j);
      }
      u_new += t;
      if (primal_step && t2 <= t1) {
        c.u = u_new;
        active_.push_back(c);
        return;
      }
      active_.erase(active_.begin() + drop);
    }
  }

  Solution finish() {
    Solution sol;
    sol.x = x_;
    sol.lambda_eq = VectorXd::Zero(Aeq_.rows());
    sol.mu_lo = VectorXd::Zero(C_.rows());
    sol.mu_hi = VectorXd::Zero(C_.rows());
    for (const auto& a : active_) {
      switch (a.kind) {
        case Kind::eq:
          sol.lambda_eq(a.row) = a.sign * a.u;
          break;
        case Kind::lower:
          sol.mu_lo(a.row) = std::max(0.0, a.u);
          break;
        case Kind::upper:
          sol.mu_hi(a.row) = std::max(0.0, a.u);
          break;
      }
    }
    sol.objective = 0.5 * x_.dot(G_ * x_) + g_.dot(x_);
    sol.iterations = iterations_;
    return sol;
  }

  const Eigen::LLT<MatrixXd>& llt_;
  const MatrixXd& G_;
  const VectorXd& g_;
  const MatrixXd& Aeq_;
  const VectorXd& beq_;
  const MatrixXd& C_;
  const VectorXd& lo_;
  const VectorXd& hi_;
  double tol_;
  Index k_ = 0;
  VectorXd row_norm_;
  VectorXd x_;
  std::vector<Active> active_;
  int iterations_ = 0;
};

}  // namespace

Solution solve(const Eigen::LLT<MatrixXd>& G_llt, const MatrixXd& G, const VectorXd& g,
               const MatrixXd& Aeq, const VectorXd& beq, const MatrixXd& C, const VectorXd& lo,
               const VectorXd& hi, double tol) {
  if (G_llt.info() != Eigen::Success) throw NumericalError("QP Hessian is not positive definite");
  const Index k = G.rows();
  if (G.cols() != k || g.size() != k || (Aeq.rows() > 0 && Aeq.cols() != k) ||
      beq.size() != Aeq.rows() || (C.rows() > 0 && C.cols() != k) || lo.size() != C.rows() ||
      hi.size() != C.rows())
    throw ValidationError("QP dimension mismatch");
  Solver solver(G_llt, G, g, Aeq, beq, C, lo, hi, tol);
  return solver.run();
}

Solution solve(const Problem& p, double tol) {
  Eigen::LLT<MatrixXd> llt(p.G);
  return solve(llt, p.G, p.g, p.Aeq, p.beq, p.C, p.lo, p.hi, tol);
}

KktResiduals kkt_residuals(const Problem& p, const Solution& s) {
  KktResiduals r;
  const double scale = 1.0 + p.G.norm() * s.x.norm() + p.g.norm();
  VectorXd grad = p.G * s.x + p.g;
  if (p.Aeq.rows() > 0) grad -= p.Aeq.transpose() * s.lambda_eq;
  if (p.C.rows() > 0) grad -= p.C.transpose() * (s.mu_lo - s.mu_hi);
  r.stationarity = grad.norm() / scale;

  if (p.Aeq.rows() > 0) r.primal = (p.Aeq * s.x - p.beq).cwiseAbs().maxCoeff();
  if (p.C.rows() > 0) {
    const VectorXd cx = p.C * s.x;
    const double mu_scale = 1.0 + s.mu_lo.cwiseAbs().sum() + s.mu_hi.cwiseAbs().sum();
    for (Index i = 0; i < p.C.rows(); ++i) {
      if (std::isfinite(p.lo(i))) {
        r.primal = std::max(r.primal, p.lo(i) - cx(i));
        r.complementarity =
            std::max(r.complementarity, std::abs(s.mu_lo(i) * (cx(i) - p.lo(i))) / mu_scale);
      }
      if (std::isfinite(p.hi(i))) {
        r.primal = std::max(r.primal, cx(i) - p.hi(i));
        r.complementarity =
            std::max(r.complementarity, std::abs(s.mu_hi(i) * (p.hi(i) - cx(i))) / mu_scale);
      }
      r.dual = std::max({r.dual, -s.mu_lo(i), -s.mu_hi(i)});
    }
  }
  r.primal = std::max(r.primal, 0.0);
  return r;
}

}  // namespace gpt::qp
