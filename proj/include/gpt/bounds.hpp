#pragma once

// Depolarized-qubit fits inside and around the reconstructed state and effect
// spaces, and the noncontextuality and Bell bounds that follow from them.

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "gpt/polytope.hpp"

namespace gpt::bounds {

inline const double kCNc = 0.75;
inline const double kCQ = 0.5 + 1.0 / (2.0 * std::sqrt(2.0));
inline const double kBLoc = 0.75;
inline const double kBQ = kCQ;

// Monte Carlo standard deviations of the fitted quantities.
struct Spread {
  double w1 = 0.0;
  double w1p = 0.0;
  double w2 = 0.0;
  double w2p = 0.0;
  double lb_cmin = 0.0;
  double ub_cmax = 0.0;
  double volume_ratio = 0.0;
  double epsilon_bound = 0.0;
};

struct BoundsReport {
  double w1 = 0.0;
  double w1p = 0.0;
  double w2 = 0.0;
  double w2p = 0.0;
  double lb_cmin = 0.0;
  double ub_cmax = 0.0;
  double ub_bmax = 0.0;
  double c_nc = kCNc;
  double c_q = kCQ;
  double b_loc = kBLoc;
  double b_q = kBQ;
  double volume_ratio = 0.0;
  double epsilon_bound = 0.0;
  // |w2p w1 - 1| and |w2 w1p - 1|.
  double reciprocity_states = 0.0;
  double reciprocity_effects = 0.0;
  double centroid_offset = 0.0;  // |vertex centroid of S_real|
  std::vector<std::string> warnings;
  std::optional<Spread> mc_std;
};

// Largest origin-centred ball inside S. Throws NumericalError naming the
// first facet with b <= 0 when the origin is not strictly interior.
double inner_ball_radius(const polytope::StateSpace& s);
// Smallest origin-centred ball containing S.
double outer_ball_radius(const polytope::StateSpace& s);

// Largest w' with hull({0, u} + sphere of radius w'/2 at e0 = 1/2) inside E.
// Returns 0 and sets *diagnostic when some facet cuts off the sphere centre.
double inner_effect_w(const polytope::EffectSpace& e, std::string* diagnostic = nullptr);
// Smallest w' with every vertex satisfying |e_bar| <= w' min(e0, 1 - e0).
double outer_effect_w(const polytope::EffectSpace& e);

double pom_success(double w, double wp);

BoundsReport analyze_bounds(const polytope::StateSpace& s_real, const polytope::EffectSpace& e_real,
                            const polytope::StateSpace& s_cons, const polytope::EffectSpace& e_cons);

}  // namespace gpt::bounds
