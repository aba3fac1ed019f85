#include "gpt/bounds.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace gpt::bounds {

namespace {

constexpr double kEdgeTol = 1e-9;

std::string facet_text(const polytope::HRep& h, Index f) {
  std::ostringstream os;
  os.precision(17);
  os << "facet " << f << ": a = (";
  for (Index c = 0; c < h.A.cols(); ++c) os << (c ? ", " : "") << h.A(f, c);
  os << "), b = " << h.b(f);
  return os.str();
}

}  // namespace

double inner_ball_radius(const polytope::StateSpace& s) {
  const auto& h = s.poly.facets;
  if (h.size() == 0) throw NumericalError("state polytope has no facets");
  double w = std::numeric_limits<double>::infinity();
  for (Index f = 0; f < h.size(); ++f) {
    if (h.b(f) <= 0.0) throw NumericalError("origin not interior to state polytope, " + facet_text(h, f));
    w = std::min(w, h.b(f) / h.A.row(f).norm());
  }
  return w;
}

double outer_ball_radius(const polytope::StateSpace& s) {
  if (s.poly.num_vertices() == 0) throw NumericalError("state polytope has no vertices");
  return s.poly.vertices.rowwise().norm().maxCoeff();
}

double inner_effect_w(const polytope::EffectSpace& e, std::string* diagnostic) {
  const auto& h = e.poly.facets;
  if (h.size() == 0) throw NumericalError("effect polytope has no facets");
  const Index k = h.A.cols();
  double w = std::numeric_limits<double>::infinity();
  for (Index f = 0; f < h.size(); ++f) {
    const double a0 = h.A(f, 0);
    if (h.b(f) < -kEdgeTol || a0 > h.b(f) + kEdgeTol)
      throw NumericalError("zero or unit effect outside effect polytope, " + facet_text(h, f));
    const double centre_slack = h.b(f) - a0 / 2.0;
    if (centre_slack < 0.0) {
      if (diagnostic) *diagnostic = "sphere centre (1/2, 0) cut off by " + facet_text(h, f);
      return 0.0;
    }
    const double abar = h.A.row(f).tail(k - 1).norm();
    if (abar > kEdgeTol) w = std::min(w, 2.0 * centre_slack / abar);
  }
  if (!std::isfinite(w)) throw NumericalError("effect polytope has no facet with a Bloch component");
  return w;
}

double outer_effect_w(const polytope::EffectSpace& e) {
  const MatrixXd& V = e.poly.vertices;
  if (V.rows() == 0) throw NumericalError("effect polytope has no vertices");
  double w = 0.0;
  for (Index i = 0; i < V.rows(); ++i) {
    const double e0 = V(i, 0);
    const double bloch = V.row(i).tail(V.cols() - 1).norm();
    if (e0 < -kEdgeTol || e0 > 1.0 + kEdgeTol)
      throw NumericalError("effect vertex with e0 = " + std::to_string(e0) + " outside [0,1]");
    const double room = std::min(e0, 1.0 - e0);
    if (room <= kEdgeTol) {
      if (bloch > kEdgeTol)
        throw NumericalError("effect vertex at e0 = " + std::to_string(e0) +
                             " has a Bloch part; no finite w' exists");
      continue;
    }
    w = std::max(w, bloch / room);
  }
  return w;
}

double pom_success(double w, double wp) { return 0.5 + w * wp / (2.0 * std::sqrt(2.0)); }

BoundsReport analyze_bounds(const polytope::StateSpace& s_real, const polytope::EffectSpace& e_real,
                            const polytope::StateSpace& s_cons, const polytope::EffectSpace& e_cons) {
  BoundsReport r;
  r.w1 = inner_ball_radius(s_real);
  r.w2 = outer_ball_radius(s_cons);
  std::string diag;
  r.w1p = inner_effect_w(e_real, &diag);
  if (!diag.empty()) r.warnings.push_back("w1p = 0: " + diag);
  r.w2p = outer_effect_w(e_cons);
  r.lb_cmin = pom_success(r.w1, r.w1p);
  r.ub_cmax = pom_success(r.w2, r.w2p);
  r.ub_bmax = r.ub_cmax;
  r.volume_ratio = polytope::volume(s_real.poly) / polytope::volume(s_cons.poly);
  r.epsilon_bound = 1.0 - r.w1 * r.w1p;
  r.reciprocity_states = std::abs(r.w2p * r.w1 - 1.0);
  r.reciprocity_effects = std::abs(r.w2 * r.w1p - 1.0);
  r.centroid_offset = polytope::vertex_centroid(s_real.poly).norm();
  if (r.centroid_offset > 0.1) {
    std::ostringstream os;
    os << "realized-state centroid lies " << r.centroid_offset
       << " from the origin; origin-centred fits are loose";
    r.warnings.push_back(os.str());
  }
  return r;
}

}  // namespace gpt::bounds
