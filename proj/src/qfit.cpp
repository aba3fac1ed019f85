#include "gpt/qfit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace gpt::qfit {

namespace {

// Symmetric basis B_p: E_ii for the diagonal, E_ij + E_ji off it.
std::vector<MatrixXd> symmetric_basis(Index d) {
  std::vector<MatrixXd> basis;
  for (Index i = 0; i < d; ++i)
    for (Index j = i; j < d; ++j) {
      MatrixXd B = MatrixXd::Zero(d, d);
      B(i, j) = 1.0;
      B(j, i) = 1.0;
      basis.push_back(B);
    }
  return basis;
}

MatrixXd assemble(const std::vector<MatrixXd>& basis, const VectorXd& z, Index d) {
  MatrixXd Q = MatrixXd::Zero(d, d);
  for (std::size_t p = 0; p < basis.size(); ++p) Q += z(static_cast<Index>(p)) * basis[p];
  return Q;
}

// Barrier for {Q > 0, tr Q < R, 1 - v'Qv > 0, t b^2 - a'Q^-1 a > 0} with
// objective tau t. The trace cap keeps the barrier bounded when the points
// do not span the space; it sits far above any Q the facets call for.
class Barrier {
 public:
  Barrier(const MatrixXd& points, const polytope::HRep& h)
      : V_(points), h_(h), d_(h.A.cols()), basis_(symmetric_basis(h.A.cols())) {
    P_ = static_cast<Index>(basis_.size());
    trace_cap_ = 1e6 * static_cast<double>(d_) / (h.b.minCoeff() * h.b.minCoeff());
  }

  Index size() const { return P_ + 1; }
  double theta() const { return static_cast<double>(V_.rows() + h_.size() + d_ + 1); }
  MatrixXd Q(const VectorXd& z) const { return assemble(basis_, z.head(P_), d_); }

  // Barrier value, +inf outside the domain.
  double value(const VectorXd& z, double tau) const {
    const MatrixXd Q = this->Q(z);
    Eigen::LLT<MatrixXd> llt(Q);
    if (llt.info() != Eigen::Success) return kInf;
    const MatrixXd L = llt.matrixL();
    if (L.diagonal().minCoeff() <= 0.0) return kInf;
    const double room = trace_cap_ - Q.trace();
    if (!(room > 0.0)) return kInf;
    double f = tau * z(P_) - 2.0 * L.diagonal().array().log().sum() - std::log(room);
    for (Index i = 0; i < V_.rows(); ++i) {
      const double h = 1.0 - V_.row(i) * Q * V_.row(i).transpose();
      if (!(h > 0.0)) return kInf;
      f -= std::log(h);
    }
    for (Index f_i = 0; f_i < h_.size(); ++f_i) {
      const VectorXd a = h_.A.row(f_i).transpose();
      const double g = z(P_) * h_.b(f_i) * h_.b(f_i) - a.dot(llt.solve(a));
      if (!(g > 0.0)) return kInf;
      f -= std::log(g);
    }
    return f;
  }

  void derivatives(const VectorXd& z, double tau, VectorXd& grad, MatrixXd& H) const {
    const Index n = size();
    const MatrixXd Q = this->Q(z);
    const MatrixXd Qi = Q.llt().solve(MatrixXd::Identity(d_, d_));
    grad = VectorXd::Zero(n);
    H = MatrixXd::Zero(n, n);
    grad(P_) = tau;

    std::vector<MatrixXd> QiB(static_cast<std::size_t>(P_));
    for (Index p = 0; p < P_; ++p) QiB[static_cast<std::size_t>(p)] = Qi * basis_[static_cast<std::size_t>(p)];
    const double room = trace_cap_ - Q.trace();
    VectorXd trB(P_);
    for (Index p = 0; p < P_; ++p) trB(p) = basis_[static_cast<std::size_t>(p)].trace();
    grad.head(P_) += trB / room;
    H.topLeftCorner(P_, P_).noalias() += trB * trB.transpose() / (room * room);
    for (Index p = 0; p < P_; ++p) {
      grad(p) -= QiB[static_cast<std::size_t>(p)].trace();
      for (Index q = 0; q < P_; ++q)
        H(p, q) += (QiB[static_cast<std::size_t>(p)] * QiB[static_cast<std::size_t>(q)]).trace();
    }

    VectorXd dh(P_);
    for (Index i = 0; i < V_.rows(); ++i) {
      const VectorXd v = V_.row(i).transpose();
      const double h = 1.0 - v.dot(Q * v);
      for (Index p = 0; p < P_; ++p) dh(p) = -v.dot(basis_[static_cast<std::size_t>(p)] * v);
      grad.head(P_) -= dh / h;
      H.topLeftCorner(P_, P_).noalias() += dh * dh.transpose() / (h * h);
    }

    VectorXd dg(n);
    MatrixXd BQiBc(d_, P_);
    for (Index f = 0; f < h_.size(); ++f) {
      const VectorXd a = h_.A.row(f).transpose();
      const double b2 = h_.b(f) * h_.b(f);
      const VectorXd c = Qi * a;
      const double g = z(P_) * b2 - a.dot(c);
      for (Index p = 0; p < P_; ++p) {
        const VectorXd Bc = basis_[static_cast<std::size_t>(p)] * c;
        dg(p) = c.dot(Bc);
        BQiBc.col(p) = Bc;
      }
      dg(P_) = b2;
      grad -= dg / g;
      H.noalias() += dg * dg.transpose() / (g * g);
      // d2g/dq_p dq_q = -2 c'B_p Q^-1 B_q c.
      H.topLeftCorner(P_, P_).noalias() += (2.0 / g) * BQiBc.transpose() * Qi * BQiBc;
    }
  }

  VectorXd initial_point() const {
    const double vmax = V_.rows() > 0 ? V_.rowwise().squaredNorm().maxCoeff() : 1.0;
    const double q0 = std::min(0.5 / std::max(vmax, 1e-300), 0.5 * trace_cap_ / static_cast<double>(d_));
    VectorXd z = VectorXd::Zero(size());
    Index p = 0;
    for (Index i = 0; i < d_; ++i)
      for (Index j = i; j < d_; ++j, ++p)
        if (i == j) z(p) = q0;
    double tmax = 0.0;
    for (Index f = 0; f < h_.size(); ++f) tmax = std::max(tmax, h_.A.row(f).squaredNorm() / q0 / (h_.b(f) * h_.b(f)));
    z(P_) = 2.0 * tmax + 1.0;
    return z;
  }

  Index t_index() const { return P_; }

 private:
  static constexpr double kInf = std::numeric_limits<double>::infinity();
  const MatrixXd& V_;
  const polytope::HRep& h_;
  Index d_;
  std::vector<MatrixXd> basis_;
  Index P_ = 0;
  double trace_cap_ = 0.0;
};

}  // namespace

GptModel shrink_model(const GptModel& model, double factor) {
  if (!(factor > 0.0 && factor <= 1.0)) throw ValidationError("shrink factor must lie in (0, 1]");
  GptModel out = model;
  const Index k = model.rank();
  out.states.rightCols(k - 1) *= factor;
  out.effects.bottomRows(k - 1) *= factor;
  return out;
}

double ellipsoid_residual(const MatrixXd& Q, const MatrixXd& points, const polytope::HRep& h) {
  double r = 0.0;
  for (Index i = 0; i < points.rows(); ++i) r = std::max(r, points.row(i) * Q * points.row(i).transpose() - 1.0);
  const Eigen::LDLT<MatrixXd> ldlt(Q);
  for (Index f = 0; f < h.size(); ++f) {
    const VectorXd a = h.A.row(f).transpose();
    r = std::max(r, a.dot(ldlt.solve(a)) - h.b(f) * h.b(f));
  }
  const double lmin = Eigen::SelfAdjointEigenSolver<MatrixXd>(Q).eigenvalues().minCoeff();
  return std::max(r, -lmin);
}

EllipsoidResult ellipsoid_between(const MatrixXd& points, const polytope::HRep& h, double feas_tol) {
  if (h.size() == 0) throw ValidationError("ellipsoid_between needs at least one halfspace");
  if (points.rows() > 0 && points.cols() != h.A.cols()) throw ValidationError("dimension mismatch");
  for (Index f = 0; f < h.size(); ++f)
    if (!(h.b(f) > 0.0)) throw ValidationError("halfspace offsets must be positive");

  Barrier barrier(points, h);
  const Index T = barrier.t_index();
  VectorXd z = barrier.initial_point();
  EllipsoidResult res;
  const double theta = barrier.theta();
  VectorXd grad, step;
  MatrixXd H;
  for (double tau = 1.0; tau < 1e16; tau *= 8.0) {
    bool centred = true;
    for (int it = 0;; ++it) {
      if (it > 200) {
        res.status = Status::not_converged;
        res.t_star = z(T);
        return res;
      }
      barrier.derivatives(z, tau, grad, H);
      step = H.ldlt().solve(-grad);
      const double dec2 = -grad.dot(step);
      if (!std::isfinite(dec2)) {
        res.status = Status::not_converged;
        return res;
      }
      if (dec2 < 1e-10) break;
      const double f0 = barrier.value(z, tau);
      double s = 1.0, f1 = f0;
      VectorXd trial;
      for (; s >= 1e-14; s *= 0.5) {
        trial = z + s * step;
        f1 = barrier.value(trial, tau);
        if (f1 <= f0 - 0.25 * s * dec2) break;
      }
      if (s < 1e-14) break;
      z = trial;
      ++res.newton_steps;
      if (z(T) < 1.0 - feas_tol) {
        centred = false;
        break;
      }
      if (f0 - f1 < 1e-13 * std::max(1.0, std::abs(f0))) break;
    }
    res.t_star = z(T);
    res.gap = centred ? theta / tau : std::numeric_limits<double>::infinity();
    if (z(T) <= 1.0 + feas_tol) {
      // Split any excess evenly between the two condition sets.
      const MatrixXd Q = barrier.Q(z) / std::sqrt(std::max(z(T), 1.0));
      if (ellipsoid_residual(Q, points, h) <= feas_tol) {
        res.status = Status::feasible;
        res.Q = Q;
        return res;
      }
    }
    if (z(T) - res.gap > 1.0 + feas_tol) {
      res.status = Status::infeasible;
      return res;
    }
    if (res.gap < 1e-12) break;
  }
  res.status = z(T) > 1.0 + feas_tol ? Status::infeasible : Status::not_converged;
  return res;
}

ShrinkResult quantum_shrink_factor(const polytope::StateSpace& s_real, const polytope::EffectSpace& e_real,
                                   double max_epsilon, double tol) {
  const MatrixXd& states = s_real.poly.vertices;
  const MatrixXd& effects = e_real.poly.vertices;
  if (states.rows() == 0 || effects.rows() == 0) throw ValidationError("empty polytope");
  if (states.cols() + 1 != effects.cols()) throw ValidationError("state/effect dimension mismatch");

  ShrinkResult out;
  auto evaluate = [&](double eps) {
    const double factor = 1.0 - eps;
    MatrixXd E = effects.transpose();
    E.bottomRows(E.rows() - 1) *= factor;
    const auto cons = polytope::dual_states(E);
    const auto r = ellipsoid_between(factor * states, cons.poly.facets);
    if (r.status == Status::not_converged)
      throw NumericalError("ellipsoid solver did not converge at epsilon = " + std::to_string(eps));
    out.trace.push_back({eps, r.status == Status::feasible, r.t_star, r.t_star - r.gap});
    return r;
  };

  auto r0 = evaluate(0.0);
  if (r0.status == Status::feasible) {
    out.epsilon_star = 0.0;
    out.Q = r0.Q;
  } else {
    auto rmax = evaluate(max_epsilon);
    if (rmax.status != Status::feasible)
      throw NumericalError("data grossly inconsistent with a qubit: infeasible at epsilon = " +
                           std::to_string(max_epsilon));
    double lo = 0.0, hi = max_epsilon;
    MatrixXd Q = rmax.Q;
    while (hi - lo > tol) {
      const double mid = 0.5 * (lo + hi);
      auto r = evaluate(mid);
      if (r.status == Status::feasible) {
        hi = mid;
        Q = r.Q;
      } else {
        lo = mid;
      }
    }
    out.epsilon_star = hi;
    out.Q = Q;
  }

  auto sorted = out.trace;
  std::sort(sorted.begin(), sorted.end(), [](const TraceEntry& a, const TraceEntry& b) { return a.epsilon < b.epsilon; });
  for (std::size_t i = 0; i < sorted.size(); ++i)
    for (std::size_t j = i + 1; j < sorted.size(); ++j) {
      if (sorted[i].feasible && !sorted[j].feasible) out.monotone = false;
      if (sorted[j].t_lower > sorted[i].t_upper + 1e-9) out.monotone = false;
    }
  return out;
}

}  // namespace gpt::qfit
