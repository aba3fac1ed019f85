#include "gpt/polytope.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <sstream>
#include <vector>

#include <Eigen/QR>
#include <Eigen/SVD>

namespace gpt::polytope {

namespace {

using Bits = std::vector<std::uint64_t>;

void set_bit(Bits& bits, Index i) { bits[static_cast<std::size_t>(i >> 6)] |= 1ULL << (i & 63); }

Bits intersect(const Bits& a, const Bits& b, Index& count) {
  Bits out(a.size());
  count = 0;
  for (std::size_t w = 0; w < a.size(); ++w) {
    out[w] = a[w] & b[w];
    count += std::popcount(out[w]);
  }
  return out;
}

std::vector<Index> members(const Bits& bits) {
  std::vector<Index> out;
  for (std::size_t w = 0; w < bits.size(); ++w) {
    std::uint64_t word = bits[w];
    while (word) {
      const int b = std::countr_zero(word);
      out.push_back(static_cast<Index>(w * 64 + static_cast<std::size_t>(b)));
      word &= word - 1;
    }
  }
  return out;
}

Index matrix_rank(const MatrixXd& m, double tol) {
  if (m.rows() == 0 || m.cols() == 0) return 0;
  Eigen::ColPivHouseholderQR<MatrixXd> qr(m);
  qr.setThreshold(tol);
  return qr.rank();
}

struct Ray {
  VectorXd r;
  Bits zero;  // processed rows tight at r
};

struct Cone {
  std::vector<VectorXd> rays;
  Index rank = 0;
  VectorXd null_direction;  // set when the cone is not pointed
};

// Extreme rays of {y : M y <= 0} by the double description method. Rows of M
// are unit vectors. Adjacency of a +/- pair is the algebraic test: the rows
// tight at both have rank D - 2.
Cone extreme_rays(const MatrixXd& M, double tol) {
  const Index p = M.rows(), D = M.cols();
  Cone cone;
  Eigen::ColPivHouseholderQR<MatrixXd> qr(M.transpose());
  qr.setThreshold(tol);
  cone.rank = qr.rank();
  if (cone.rank < D) {
    Eigen::JacobiSVD<MatrixXd> svd(M, Eigen::ComputeFullV);
    cone.null_direction = svd.matrixV().col(D - 1);
    return cone;
  }

  const std::size_t words = static_cast<std::size_t>((p + 63) / 64);
  std::vector<Index> basis(static_cast<std::size_t>(D));
  for (Index j = 0; j < D; ++j) basis[static_cast<std::size_t>(j)] = qr.colsPermutation().indices()(j);
  MatrixXd B(D, D);
  for (Index j = 0; j < D; ++j) B.row(j) = M.row(basis[static_cast<std::size_t>(j)]);
  const MatrixXd R = -B.fullPivLu().inverse();

  std::vector<Ray> rays;
  for (Index j = 0; j < D; ++j) {
    Ray ray{R.col(j).normalized(), Bits(words, 0)};
    for (Index t = 0; t < D; ++t)
      if (t != j) set_bit(ray.zero, basis[static_cast<std::size_t>(t)]);
    rays.push_back(std::move(ray));
  }

  std::vector<bool> in_basis(static_cast<std::size_t>(p), false);
  for (Index b : basis) in_basis[static_cast<std::size_t>(b)] = true;

  std::vector<double> s;
  std::vector<std::size_t> pos, neg;
  for (Index i = 0; i < p; ++i) {
    if (in_basis[static_cast<std::size_t>(i)]) continue;
    const auto row = M.row(i);
    s.resize(rays.size());
    pos.clear();
    neg.clear();
    for (std::size_t r = 0; r < rays.size(); ++r) {
      s[r] = row.dot(rays[r].r);
      if (s[r] > tol)
        pos.push_back(r);
      else if (s[r] < -tol)
        neg.push_back(r);
    }
    if (pos.empty()) {
      for (std::size_t r = 0; r < rays.size(); ++r)
        if (s[r] >= -tol) set_bit(rays[r].zero, i);
      continue;
    }

    std::vector<Ray> next;
    next.reserve(rays.size());
    for (std::size_t a : pos)
      for (std::size_t b : neg) {
        Index count = 0;
        Bits common = intersect(rays[a].zero, rays[b].zero, count);
        if (count < D - 2) continue;
        if (D > 2) {
          const auto idx = members(common);
          MatrixXd sub(static_cast<Index>(idx.size()), D);
          for (std::size_t t = 0; t < idx.size(); ++t) sub.row(static_cast<Index>(t)) = M.row(idx[t]);
          if (matrix_rank(sub, tol) < D - 2) continue;
        }
        VectorXd r = s[a] * rays[b].r - s[b] * rays[a].r;
        const double nrm = r.norm();
        if (nrm <= tol) continue;
        set_bit(common, i);
        next.push_back({r / nrm, std::move(common)});
      }
    for (std::size_t r = 0; r < rays.size(); ++r) {
      if (s[r] > tol) continue;
      if (s[r] >= -tol) set_bit(rays[r].zero, i);
      next.push_back(std::move(rays[r]));
    }
    rays = std::move(next);
  }
  for (auto& r : rays) cone.rays.push_back(std::move(r.r));
  return cone;
}

std::string format_vector(const VectorXd& v) {
  std::ostringstream os;
  os << "(";
  for (Index i = 0; i < v.size(); ++i) os << (i ? ", " : "") << v(i);
  os << ")";
  return os.str();
}

MatrixXd dedupe_rows(const MatrixXd& pts, double tol) {
  std::vector<Index> keep;
  for (Index i = 0; i < pts.rows(); ++i) {
    bool dup = false;
    for (Index j : keep)
      if ((pts.row(i) - pts.row(j)).norm() <= tol * std::max(1.0, pts.row(j).norm())) {
        dup = true;
        break;
      }
    if (!dup) keep.push_back(i);
  }
  MatrixXd out(static_cast<Index>(keep.size()), pts.cols());
  for (std::size_t t = 0; t < keep.size(); ++t) out.row(static_cast<Index>(t)) = pts.row(keep[t]);
  return out;
}

HRep dedupe_halfspaces(const HRep& h, double tol) {
  std::vector<Index> keep;
  for (Index i = 0; i < h.size(); ++i) {
    bool dup = false;
    for (Index j : keep)
      if ((h.A.row(i) - h.A.row(j)).norm() + std::abs(h.b(i) - h.b(j)) <= tol * std::max(1.0, std::abs(h.b(j)))) {
        dup = true;
        break;
      }
    if (!dup) keep.push_back(i);
  }
  HRep out{MatrixXd(static_cast<Index>(keep.size()), h.A.cols()), VectorXd(static_cast<Index>(keep.size()))};
  for (std::size_t t = 0; t < keep.size(); ++t) {
    out.A.row(static_cast<Index>(t)) = h.A.row(keep[t]);
    out.b(static_cast<Index>(t)) = h.b(keep[t]);
  }
  return out;
}

MatrixXd select_rows(const MatrixXd& m, const std::vector<Index>& rows) {
  MatrixXd out(static_cast<Index>(rows.size()), m.cols());
  for (std::size_t t = 0; t < rows.size(); ++t) out.row(static_cast<Index>(t)) = m.row(rows[t]);
  return out;
}

// Normalizes rows, drops vacuous ones (a = 0, b >= 0) and duplicates.
HRep normalize_halfspaces(const MatrixXd& A, const VectorXd& b, const Tolerances& tol) {
  if (A.rows() != b.size()) throw ValidationError("halfspace matrix and offsets disagree in length");
  std::vector<Index> keep;
  HRep h{A, b};
  for (Index i = 0; i < A.rows(); ++i) {
    const double na = A.row(i).norm();
    if (na <= tol.zero) {
      if (b(i) < -tol.zero) throw NumericalError("polytope is empty: constraint 0 <= " + std::to_string(b(i)));
      continue;
    }
    h.A.row(i) /= na;
    h.b(i) /= na;
    keep.push_back(i);
  }
  HRep out{select_rows(h.A, keep), VectorXd(static_cast<Index>(keep.size()))};
  for (std::size_t t = 0; t < keep.size(); ++t) out.b(static_cast<Index>(t)) = h.b(keep[t]);
  return dedupe_halfspaces(out, 1e-12);
}

double polygon_area(const MatrixXd& pts) {
  const Eigen::RowVector2d c = pts.colwise().mean();
  std::vector<Index> order(static_cast<std::size_t>(pts.rows()));
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> angle(order.size());
  for (Index i = 0; i < pts.rows(); ++i)
    angle[static_cast<std::size_t>(i)] = std::atan2(pts(i, 1) - c(1), pts(i, 0) - c(0));
  std::sort(order.begin(), order.end(),
            [&](Index a, Index b) { return angle[static_cast<std::size_t>(a)] < angle[static_cast<std::size_t>(b)]; });
  double area = 0.0;
  for (std::size_t t = 0; t < order.size(); ++t) {
    const auto p = pts.row(order[t]);
    const auto q = pts.row(order[(t + 1) % order.size()]);
    area += p(0) * q(1) - p(1) * q(0);
  }
  return 0.5 * std::abs(area);
}

// Orthonormal basis (columns) of the complement of unit vector a.
MatrixXd complement_basis(const VectorXd& a) {
  Eigen::HouseholderQR<MatrixXd> qr(a);
  const MatrixXd Q = qr.householderQ();
  return Q.rightCols(a.size() - 1);
}

double facet_sum(const MatrixXd& pts, const HRep& h, const Tolerances& tol);

// Volume of the hull of points that are all extreme, full-dimensional in
// their own coordinates.
double hull_volume(const MatrixXd& pts, const Tolerances& tol) {
  const Index j = pts.cols();
  if (j == 1) return pts.maxCoeff() - pts.minCoeff();
  if (j == 2) return polygon_area(pts);
  return facet_sum(pts, facet_enumeration(pts, tol), tol);
}

// Sum over facets of (height from the centroid / d) x facet volume.
double facet_sum(const MatrixXd& pts, const HRep& h, const Tolerances& tol) {
  const Index d = pts.cols();
  const VectorXd c = pts.colwise().mean().transpose();
  const double scale = std::max(1.0, (pts.rowwise() - c.transpose()).rowwise().norm().maxCoeff());
  double total = 0.0;
  for (Index f = 0; f < h.size(); ++f) {
    const VectorXd a = h.A.row(f).transpose();
    std::vector<Index> tight;
    for (Index i = 0; i < pts.rows(); ++i)
      if (std::abs(pts.row(i).dot(a) - h.b(f)) <= 10.0 * tol.zero * scale) tight.push_back(i);
    if (static_cast<Index>(tight.size()) < d) continue;
    const MatrixXd face = select_rows(pts, tight);
    const MatrixXd coords = (face.rowwise() - face.row(0)) * complement_basis(a);
    total += (h.b(f) - a.dot(c)) / static_cast<double>(d) * hull_volume(coords, tol);
  }
  return total;
}

}  // namespace

Index affine_dimension(const MatrixXd& points, double tol) {
  if (points.rows() == 0) return -1;
  if (points.rows() == 1) return 0;
  const MatrixXd X = points.bottomRows(points.rows() - 1).rowwise() - points.row(0);
  Eigen::JacobiSVD<MatrixXd> svd(X);
  const VectorXd& sv = svd.singularValues();
  if (sv.size() == 0 || sv(0) == 0.0) return 0;
  Index r = 0;
  for (Index i = 0; i < sv.size(); ++i)
    if (sv(i) > tol * sv(0)) ++r;
  return r;
}

HRep facet_enumeration(const MatrixXd& points, const Tolerances& tol) {
  const Index d = points.cols();
  if (d < 1 || points.rows() == 0) throw ValidationError("facet enumeration needs a non-empty point set");
  const MatrixXd P = dedupe_rows(points, tol.dedupe);
  const Index aff = affine_dimension(P, tol.zero);
  if (aff < d)
    throw DegenerateError("points span an affine subspace of dimension " + std::to_string(aff) +
                              " in dimension " + std::to_string(d),
                          aff);

  const Eigen::RowVectorXd c = P.colwise().mean();
  MatrixXd X = P.rowwise() - c;
  const double scale = X.rowwise().norm().maxCoeff();
  X /= scale;

  MatrixXd M(X.rows(), d + 1);
  M << X, -VectorXd::Ones(X.rows());
  M.rowwise().normalize();
  const Cone cone = extreme_rays(M, tol.zero);

  std::vector<VectorXd> as;
  std::vector<double> bs;
  for (const auto& r : cone.rays) {
    VectorXd a = r.head(d);
    const double na = a.norm();
    if (na <= tol.zero) continue;
    a /= na;
    const double beta = r(d) / na;
    std::vector<Index> tight;
    for (Index i = 0; i < X.rows(); ++i)
      if (std::abs(X.row(i).dot(a) - beta) <= 10.0 * tol.zero) tight.push_back(i);
    if (affine_dimension(select_rows(X, tight), tol.zero) != d - 1) continue;
    as.push_back(a);
    bs.push_back(beta * scale + c.dot(a.transpose()));
  }
  HRep h{MatrixXd(static_cast<Index>(as.size()), d), VectorXd(static_cast<Index>(as.size()))};
  for (std::size_t t = 0; t < as.size(); ++t) {
    h.A.row(static_cast<Index>(t)) = as[t].transpose();
    h.b(static_cast<Index>(t)) = bs[t];
  }
  return dedupe_halfspaces(h, tol.dedupe);
}

MatrixXd vertex_enumeration(const HRep& input, const Tolerances& tol) {
  const Index d = input.A.cols();
  if (d < 1) throw ValidationError("vertex enumeration needs dimension >= 1");
  const HRep h = normalize_halfspaces(input.A, input.b, tol);
  if (matrix_rank(h.A, tol.zero) < d) {
    Eigen::JacobiSVD<MatrixXd> svd(h.A.rows() > 0 ? h.A : MatrixXd::Zero(1, d), Eigen::ComputeFullV);
    VectorXd dir = svd.matrixV().col(d - 1);
    throw UnboundedError("polytope is unbounded along " + format_vector(dir), dir);
  }

  MatrixXd M(h.size() + 1, d + 1);
  M.topLeftCorner(h.size(), d) = h.A;
  M.topRightCorner(h.size(), 1) = -h.b;
  M.row(h.size()).setZero();
  M(h.size(), d) = -1.0;
  M.rowwise().normalize();
  const Cone cone = extreme_rays(M, tol.zero);
  if (cone.rank < d + 1) throw UnboundedError("polytope has a lineality direction", cone.null_direction.head(d));

  std::vector<VectorXd> verts;
  for (const auto& r : cone.rays) {
    const double t = r(d);
    if (t <= tol.zero) {
      const VectorXd dir = r.head(d).normalized();
      throw UnboundedError("polytope is unbounded along " + format_vector(dir), dir);
    }
    const VectorXd x = r.head(d) / t;
    const double slack = 10.0 * tol.zero * std::max(1.0, x.norm());
    const VectorXd residual = h.A * x - h.b;
    if (residual.maxCoeff() > slack) continue;
    std::vector<Index> tight;
    for (Index i = 0; i < h.size(); ++i)
      if (residual(i) >= -slack) tight.push_back(i);
    if (matrix_rank(select_rows(h.A, tight), tol.zero) == d) verts.push_back(x);
  }
  if (verts.empty()) throw NumericalError("polytope is empty");
  MatrixXd V(static_cast<Index>(verts.size()), d);
  for (std::size_t t = 0; t < verts.size(); ++t) V.row(static_cast<Index>(t)) = verts[t].transpose();
  return dedupe_rows(V, tol.dedupe);
}

Polytope from_vertices(const MatrixXd& points, const Tolerances& tol) {
  Polytope p;
  p.dim = points.cols();
  p.facets = facet_enumeration(points, tol);
  const MatrixXd P = dedupe_rows(points, tol.dedupe);
  const double scale = std::max(1.0, P.cwiseAbs().maxCoeff());
  std::vector<Index> extreme;
  for (Index i = 0; i < P.rows(); ++i) {
    std::vector<Index> tight;
    for (Index f = 0; f < p.facets.size(); ++f)
      if (std::abs(p.facets.A.row(f).dot(P.row(i)) - p.facets.b(f)) <= 10.0 * tol.zero * scale) tight.push_back(f);
    if (matrix_rank(select_rows(p.facets.A, tight), tol.zero) == p.dim) extreme.push_back(i);
  }
  p.vertices = select_rows(P, extreme);
  return p;
}

Polytope from_halfspaces(const MatrixXd& A, const VectorXd& b, const Tolerances& tol) {
  Polytope p;
  p.dim = A.cols();
  const HRep h = normalize_halfspaces(A, b, tol);
  p.vertices = vertex_enumeration(h, tol);
  const double scale = std::max(1.0, p.vertices.cwiseAbs().maxCoeff());
  std::vector<Index> facets;
  for (Index f = 0; f < h.size(); ++f) {
    std::vector<Index> tight;
    for (Index i = 0; i < p.vertices.rows(); ++i)
      if (std::abs(h.A.row(f).dot(p.vertices.row(i)) - h.b(f)) <= 10.0 * tol.zero * scale) tight.push_back(i);
    if (affine_dimension(select_rows(p.vertices, tight), tol.zero) == p.dim - 1) facets.push_back(f);
  }
  HRep out{select_rows(h.A, facets), VectorXd(static_cast<Index>(facets.size()))};
  for (std::size_t t = 0; t < facets.size(); ++t) out.b(static_cast<Index>(t)) = h.b(facets[t]);
  p.facets = dedupe_halfspaces(out, tol.dedupe);
  return p;
}

double volume(const Polytope& p, const Tolerances& tol) {
  if (p.num_vertices() == 0 || p.num_facets() == 0)
    throw ValidationError("volume needs both vertex and facet representations");
  if (affine_dimension(p.vertices, tol.zero) < p.dim)
    throw DegenerateError("polytope is not full-dimensional", affine_dimension(p.vertices, tol.zero));
  if (p.dim == 1) return p.vertices.maxCoeff() - p.vertices.minCoeff();
  if (p.dim == 2) return polygon_area(p.vertices);
  return facet_sum(p.vertices, p.facets, tol);
}

bool contains(const Polytope& p, const VectorXd& x, double slack) {
  if (x.size() != p.dim) throw ValidationError("point dimension does not match the polytope");
  if (p.num_facets() == 0) throw ValidationError("containment needs the halfspace representation");
  return (p.facets.A * x - p.facets.b).maxCoeff() <= slack;
}

VectorXd vertex_centroid(const Polytope& p) { return p.vertices.colwise().mean().transpose(); }

StateSpace realized_states(const MatrixXd& S, const Tolerances& tol) {
  if (S.cols() < 2) throw ValidationError("state matrix needs k >= 2 columns");
  if ((S.col(0).array() - 1.0).abs().maxCoeff() > 1e-9)
    throw ValidationError("state rows must have leading component 1");
  return {from_vertices(S.rightCols(S.cols() - 1), tol), Role::realized};
}

EffectSpace realized_effects(const MatrixXd& E, const Tolerances& tol) {
  return {from_vertices(E.transpose(), tol), Role::realized};
}

StateSpace dual_states(const MatrixXd& effects, const Tolerances& tol) {
  const Index k = effects.rows();
  if (k < 2) throw ValidationError("effects need k >= 2 components");
  const Index n = effects.cols();
  MatrixXd A(2 * n, k - 1);
  VectorXd b(2 * n);
  for (Index j = 0; j < n; ++j) {
    const double e0 = effects(0, j);
    const auto bar = effects.col(j).tail(k - 1).transpose();
    A.row(2 * j) = -bar;
    b(2 * j) = e0;
    A.row(2 * j + 1) = bar;
    b(2 * j + 1) = 1.0 - e0;
  }
  try {
    return {from_halfspaces(A, b, tol), Role::consistent};
  } catch (const UnboundedError& e) {
    throw UnboundedError(std::string("consistent state space: ") + e.what(), e.direction());
  }
}

StateSpace dual_states(const EffectSpace& E, const Tolerances& tol) {
  return dual_states(MatrixXd(E.poly.vertices.transpose()), tol);
}

EffectSpace dual_effects(const StateSpace& S, const Tolerances& tol) {
  const Index d = S.poly.dim;
  const Index m = S.poly.num_vertices();
  MatrixXd A(2 * m, d + 1);
  VectorXd b(2 * m);
  for (Index i = 0; i < m; ++i) {
    Eigen::RowVectorXd s(d + 1);
    s << 1.0, S.poly.vertices.row(i);
    A.row(2 * i) = -s;
    b(2 * i) = 0.0;
    A.row(2 * i + 1) = s;
    b(2 * i + 1) = 1.0;
  }
  try {
    return {from_halfspaces(A, b, tol), Role::consistent};
  } catch (const UnboundedError& e) {
    throw UnboundedError(std::string("consistent effect space: ") + e.what(), e.direction());
  }
}

}  // namespace gpt::polytope
