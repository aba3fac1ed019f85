#include <algorithm>
#include <array>
#include <functional>
#include <map>
#include <set>
#include <random>

#include "doctest.h"
#include "gpt/polytope.hpp"

using namespace gpt;
using namespace gpt::polytope;

namespace {

MatrixXd cube_vertices(double half = 1.0) {
  MatrixXd V(8, 3);
  for (int i = 0; i < 8; ++i) V.row(i) << (i & 1 ? half : -half), (i & 2 ? half : -half), (i & 4 ? half : -half);
  return V;
}

MatrixXd cross_vertices(double r = 1.0) {
  MatrixXd V(6, 3);
  V << MatrixXd::Identity(3, 3) * r, -MatrixXd::Identity(3, 3) * r;
  return V;
}

// Polar {x : v.x <= 1 for all rows v}.
Polytope polar(const MatrixXd& V) { return from_halfspaces(V, VectorXd::Ones(V.rows())); }

bool same_point_set(const MatrixXd& a, const MatrixXd& b, double tol) {
  if (a.rows() != b.rows()) return false;
  for (Index i = 0; i < a.rows(); ++i) {
    double best = 1e300;
    for (Index j = 0; j < b.rows(); ++j) best = std::min(best, (a.row(i) - b.row(j)).norm());
    if (best > tol) return false;
  }
  return true;
}

// Brute-force hull oracle in general position: every d-subset whose
// hyperplane leaves all points on one side is a facet.
std::pair<std::set<Index>, Index> brute_force_hull(const MatrixXd& P) {
  const Index N = P.rows(), d = P.cols();
  std::set<Index> verts;
  Index facets = 0;
  std::vector<Index> idx(static_cast<std::size_t>(d));
  std::function<void(Index, Index)> rec = [&](Index start, Index depth) {
    if (depth == d) {
      MatrixXd X(d, d + 1);
      for (Index t = 0; t < d; ++t) X.row(t) << P.row(idx[static_cast<std::size_t>(t)]), 1.0;
      Eigen::FullPivLU<MatrixXd> lu(X);
      const VectorXd h = lu.kernel().col(0);
      int pos = 0, neg = 0;
      for (Index i = 0; i < N; ++i) {
        const double v = P.row(i).dot(h.head(d)) + h(d);
        if (v > 1e-9) ++pos;
        if (v < -1e-9) ++neg;
      }
      if (pos == 0 || neg == 0) {
        ++facets;
        for (Index t : idx) verts.insert(t);
      }
      return;
    }
    for (Index i = start; i < N; ++i) {
      idx[static_cast<std::size_t>(depth)] = i;
      rec(i + 1, depth + 1);
    }
  };
  rec(0, 0);
  return {verts, facets};
}

// Icosahedron subdivided `levels` times and projected to the sphere.
MatrixXd icosphere(int levels) {
  const double g = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Eigen::Vector3d> v = {{-1, g, 0}, {1, g, 0},  {-1, -g, 0}, {1, -g, 0}, {0, -1, g}, {0, 1, g},
                                    {0, -1, -g}, {0, 1, -g}, {g, 0, -1},  {g, 0, 1},  {-g, 0, -1}, {-g, 0, 1}};
  for (auto& x : v) x.normalize();
  std::vector<std::array<int, 3>> f = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
                                       {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
                                       {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
                                       {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
  for (int l = 0; l < levels; ++l) {
    std::map<std::pair<int, int>, int> mid;
    auto midpoint = [&](int a, int b) {
      auto key = std::minmax(a, b);
      auto it = mid.find(key);
      if (it != mid.end()) return it->second;
      v.push_back((v[static_cast<std::size_t>(a)] + v[static_cast<std::size_t>(b)]).normalized());
      const int id = static_cast<int>(v.size()) - 1;
      mid[key] = id;
      return id;
    };
    std::vector<std::array<int, 3>> next;
    for (auto [a, b, c] : f) {
      const int ab = midpoint(a, b), bc = midpoint(b, c), ca = midpoint(c, a);
      next.push_back({a, ab, ca});
      next.push_back({b, bc, ab});
      next.push_back({c, ca, bc});
      next.push_back({ab, bc, ca});
    }
    f = std::move(next);
  }
  MatrixXd out(static_cast<Index>(v.size()), 3);
  for (std::size_t i = 0; i < v.size(); ++i) out.row(static_cast<Index>(i)) = v[i].transpose();
  return out;
}

}  // namespace

TEST_CASE("unit square") {
  MatrixXd V(4, 2);
  V << 0, 0, 1, 0, 0, 1, 1, 1;
  auto h = facet_enumeration(V);
  REQUIRE(h.size() == 4);
  for (Index f = 0; f < 4; ++f) {
    CHECK(h.A.row(f).cwiseAbs().maxCoeff() == doctest::Approx(1.0));
    CHECK(h.A.row(f).cwiseAbs().minCoeff() == doctest::Approx(0.0));
  }
  auto p = from_vertices(V);
  CHECK(volume(p) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("cube and cross-polytope") {
  auto cube = from_vertices(cube_vertices());
  CHECK(cube.num_facets() == 6);
  CHECK(cube.num_vertices() == 8);
  CHECK(std::abs(volume(cube) - 8.0) < 1e-9);
  for (Index f = 0; f < 6; ++f) CHECK(std::abs(cube.facets.b(f) - 1.0) < 1e-12);

  auto cross = from_vertices(cross_vertices());
  CHECK(cross.num_facets() == 8);
  CHECK(std::abs(volume(cross) - 4.0 / 3.0) < 1e-9);
  for (Index f = 0; f < 8; ++f) {
    CHECK(std::abs(cross.facets.b(f) - 1.0 / std::sqrt(3.0)) < 1e-12);
    CHECK(cross.facets.A.row(f).cwiseAbs().isApprox(Eigen::RowVector3d::Constant(1.0 / std::sqrt(3.0))));
  }
  CHECK(volume(cross) / volume(cube) == doctest::Approx(1.0 / 6.0).epsilon(1e-12));

  // Polar duality and its scaling.
  CHECK(same_point_set(polar(cube_vertices()).vertices, cross_vertices(), 1e-9));
  CHECK(same_point_set(polar(cross_vertices()).vertices, cube_vertices(), 1e-9));
  for (double lambda : {0.5, 2.0, 3.7}) {
    CHECK(same_point_set(polar(cube_vertices(lambda)).vertices, cross_vertices(1.0 / lambda), 1e-9));
    CHECK(same_point_set(polar(cross_vertices(lambda)).vertices, cube_vertices(1.0 / lambda), 1e-9));
  }
}

TEST_CASE("round trip and redundant input") {
  std::mt19937_64 rng(12);
  std::normal_distribution<double> g;
  MatrixXd V = MatrixXd::NullaryExpr(40, 3, [&]() { return g(rng); });
  // Add interior points and duplicates.
  MatrixXd W(V.rows() + 12, 3);
  W << V, 0.01 * MatrixXd::NullaryExpr(10, 3, [&]() { return g(rng); }), V.topRows(2);
  auto p = from_vertices(W);
  auto q = from_halfspaces(p.facets.A, p.facets.b);
  CHECK(same_point_set(p.vertices, q.vertices, 1e-9));
  CHECK(q.num_facets() == p.num_facets());
  auto r = from_vertices(q.vertices);
  CHECK(same_point_set(r.vertices, p.vertices, 1e-9));
}

TEST_CASE("random 4D points against a brute-force hull") {
  std::mt19937_64 rng(99);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 3; ++trial) {
    MatrixXd P = MatrixXd::NullaryExpr(50, 4, [&]() { return g(rng); });
    auto [verts, facets] = brute_force_hull(P);
    auto p = from_vertices(P);
    CHECK(p.num_facets() == facets);
    MatrixXd expect(static_cast<Index>(verts.size()), 4);
    Index t = 0;
    for (Index i : verts) expect.row(t++) = P.row(i);
    CHECK(same_point_set(p.vertices, expect, 1e-12));
    auto back = vertex_enumeration(p.facets);
    CHECK(same_point_set(back, expect, 1e-9));
  }
}

TEST_CASE("volume against Monte Carlo") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 3; ++trial) {
    MatrixXd P = MatrixXd::NullaryExpr(15 + 10 * trial, 3, [&]() { return g(rng); });
    auto p = from_vertices(P);
    const double exact = volume(p);
    const Eigen::RowVector3d lo = p.vertices.colwise().minCoeff(), hi = p.vertices.colwise().maxCoeff();
    const double box = (hi - lo).prod();
    const int samples = 1000000;
    int hits = 0;
    for (int s = 0; s < samples; ++s) {
      VectorXd x(3);
      for (int c = 0; c < 3; ++c) x(c) = lo(c) + 0.5 * (u(rng) + 1.0) * (hi(c) - lo(c));
      hits += contains(p, x, 0.0);
    }
    const double frac = static_cast<double>(hits) / samples;
    const double se = box * std::sqrt(frac * (1 - frac) / samples);
    CHECK(std::abs(box * frac - exact) < 3.0 * se);
  }
  // One and four dimensions.
  MatrixXd seg(3, 1);
  seg << -0.5, 2.0, 0.3;
  CHECK(volume(from_vertices(seg)) == doctest::Approx(2.5));
  MatrixXd tess(16, 4);
  for (int i = 0; i < 16; ++i)
    for (int c = 0; c < 4; ++c) tess(i, c) = (i >> c) & 1 ? 1.0 : -1.0;
  CHECK(std::abs(volume(from_vertices(tess)) - 16.0) < 1e-9);
  MatrixXd simplex = MatrixXd::Zero(5, 4);
  simplex.bottomRows(4) = MatrixXd::Identity(4, 4);
  CHECK(std::abs(volume(from_vertices(simplex)) - 1.0 / 24.0) < 1e-12);
}

TEST_CASE("degenerate and unbounded input") {
  MatrixXd flat(4, 3);
  flat << 0, 0, 0, 1, 0, 0, 0, 1, 0, 1, 1, 0;
  try {
    facet_enumeration(flat);
    FAIL("expected DegenerateError");
  } catch (const DegenerateError& e) {
    CHECK(e.affine_dim() == 2);
  }
  MatrixXd A(2, 2);
  A << -1, 0, 0, -1;
  CHECK_THROWS_AS(from_halfspaces(A, VectorXd::Zero(2)), UnboundedError);
  MatrixXd B(3, 2);
  B << -1, 0, 1, 0, 0, -1;
  try {
    from_halfspaces(B, VectorXd::Ones(3));
    FAIL("expected UnboundedError");
  } catch (const UnboundedError& e) {
    CHECK(std::abs(e.direction()(1)) == doctest::Approx(1.0));
  }
  MatrixXd C(2, 1);
  C << 1, -1;
  CHECK_THROWS_AS(from_halfspaces(C, Eigen::Vector2d(-1, -1)), NumericalError);
}

TEST_CASE("classical bit duals") {
  // States (1, x), x in [-1, 1]; effects square with vertices 0, u, (1/2, +-1/2).
  MatrixXd S(2, 2);
  S << 1, -1, 1, 1;
  auto states = realized_states(S);
  auto effects = dual_effects(states);
  MatrixXd square(4, 2);
  square << 0, 0, 1, 0, 0.5, 0.5, 0.5, -0.5;
  CHECK(same_point_set(effects.poly.vertices, square, 1e-9));
  auto back = dual_states(effects);
  CHECK(same_point_set(back.poly.vertices, S.rightCols(1), 1e-9));
  CHECK(back.role == Role::consistent);
}

TEST_CASE("octahedron states and Pauli effects") {
  MatrixXd S(6, 4);
  S << MatrixXd::Ones(6, 1), cross_vertices();
  auto octa = realized_states(S);
  auto diamond = dual_effects(octa);
  MatrixXd expect(10, 4);
  expect.row(0) << 0, 0, 0, 0;
  expect.row(1) << 1, 0, 0, 0;
  expect.bottomRows(8) << VectorXd::Constant(8, 0.5), 0.5 * cube_vertices();
  CHECK(same_point_set(diamond.poly.vertices, expect, 1e-9));

  // Double dual returns the octahedron.
  auto dd = dual_states(diamond);
  CHECK(same_point_set(dd.poly.vertices, cross_vertices(), 1e-9));
  for (Index i = 0; i < octa.poly.num_vertices(); ++i) CHECK(contains(dd.poly, octa.poly.vertices.row(i).transpose()));

  // Pauli effects closed under complement: dual is the cube.
  MatrixXd E(4, 8);
  E.col(0) << 1, 0, 0, 0;
  E.col(1) << 0, 0, 0, 0;
  for (int i = 0; i < 3; ++i) {
    E.col(2 + 2 * i) = 0.5 * (Eigen::Vector4d::Unit(0) + Eigen::Vector4d::Unit(i + 1));
    E.col(3 + 2 * i) = 0.5 * (Eigen::Vector4d::Unit(0) - Eigen::Vector4d::Unit(i + 1));
  }
  auto pauli = realized_effects(E);
  CHECK(pauli.poly.num_vertices() == 8);
  auto cube = dual_states(pauli);
  CHECK(same_point_set(cube.poly.vertices, cube_vertices(), 1e-9));
  CHECK(std::abs(volume(cube.poly) - 8.0) < 1e-9);
}

TEST_CASE("dual of a fine Bloch diamond approximates the ball") {
  const MatrixXd sphere = icosphere(3);
  REQUIRE(sphere.rows() == 642);
  MatrixXd E(4, sphere.rows() + 2);
  E.col(0) << 1, 0, 0, 0;
  E.col(1).setZero();
  for (Index i = 0; i < sphere.rows(); ++i) E.col(i + 2) << 0.5, 0.5 * sphere.row(i).transpose();
  auto states = dual_states(E);
  const VectorXd radii = states.poly.vertices.rowwise().norm();
  const double hausdorff = std::max(radii.maxCoeff() - 1.0, 1.0 - states.poly.facets.b.minCoeff());
  CHECK(hausdorff < 0.01);
  CHECK(states.poly.facets.b.minCoeff() > 0.99);
  CHECK(radii.minCoeff() >= 1.0 - 1e-9);
}

TEST_CASE("dual volume shrinks as effects are added") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  MatrixXd E(4, 40);
  E.col(0) << 1, 0, 0, 0;
  E.col(1).setZero();
  for (Index j = 2; j < 40; j += 2) {
    Eigen::Vector3d n(g(rng), g(rng), g(rng));
    n.normalize();
    E.col(j) << 0.5, 0.45 * n;
    E.col(j + 1) << 0.5, -0.45 * n;
  }
  double prev = 1e300;
  for (Index cols = 10; cols <= 40; cols += 6) {
    const double v = volume(dual_states(MatrixXd(E.leftCols(cols))).poly);
    CHECK(v <= prev + 1e-12);
    prev = v;
  }
}
