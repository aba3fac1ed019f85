#include "gpt/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

namespace gpt::synth {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

void check_weight(double w, const char* name) {
  if (!(w >= 0.0 && w <= 1.0))
    throw ValidationError(std::string(name) + " must lie in [0,1], got " + std::to_string(w));
}

std::int64_t draw_poisson(std::mt19937_64& rng, double mean) {
  if (mean <= 0.0) return 0;
  std::poisson_distribution<std::int64_t> dist(mean);
  return dist(rng);
}

}  // namespace

ExperimentDesign ExperimentDesign::full_grid(Index m, Index n) {
  if (m < 1 || n < 2) throw ValidationError("full-grid design needs m >= 1 and n >= 2");
  ExperimentDesign d;
  d.m = m;
  d.n = n;
  d.mask = MaskMatrix::Constant(m, n, true);
  d.mode = DesignMode::full_grid;
  return d;
}

ExperimentDesign ExperimentDesign::fiducial(Index m, Index n, Index f) {
  if (f < 1 || m < f || n - 1 < f)
    throw ValidationError("fiducial design needs 1 <= f <= m and f <= n-1");
  ExperimentDesign d;
  d.m = m;
  d.n = n;
  d.mode = DesignMode::fiducial;
  d.fiducials = f;
  d.mask = MaskMatrix::Constant(m, n, false);
  d.mask.topRows(f).setConstant(true);
  d.mask.leftCols(f + 1).setConstant(true);
  return d;
}

Index ExperimentDesign::measured_configurations() const {
  return mask.rightCols(n - 1).count();
}

std::vector<Vector3d> spiral_points(Index N) {
  if (N < 2) throw ValidationError("spiral_points needs N >= 2");
  std::vector<Vector3d> pts;
  pts.reserve(static_cast<std::size_t>(N));
  double phi = 0.0;
  const double dn = static_cast<double>(N);
  for (Index k = 1; k <= N; ++k) {
    const double h = -1.0 + 2.0 * static_cast<double>(k - 1) / (dn - 1.0);
    const double theta = std::acos(std::clamp(h, -1.0, 1.0));
    if (k == 1 || k == N)
      phi = 0.0;
    else
      phi = std::fmod(phi + 3.6 / std::sqrt(dn * (1.0 - h * h)), 2.0 * std::numbers::pi);
    pts.emplace_back(std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi), h);
  }
  // Exact poles.
  pts.front() = Vector3d(0, 0, -1);
  pts.back() = Vector3d(0, 0, 1);
  return pts;
}

std::vector<Vector3d> circle_points(Index N) {
  if (N < 2) throw ValidationError("circle_points needs N >= 2");
  std::vector<Vector3d> pts;
  for (Index k = 0; k < N; ++k) {
    const double a = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(N);
    pts.emplace_back(std::sin(a), 0.0, -std::cos(a));
  }
  return pts;
}

std::vector<Vector3d> icosahedron_vertices() {
  const double g = std::numbers::phi;
  std::vector<Vector3d> v = {{0, 1, g},  {0, -1, g}, {1, g, 0},   {-1, g, 0},
                             {g, 0, 1},  {g, 0, -1}, {0, -1, -g}, {0, 1, -g},
                             {-1, -g, 0}, {1, -g, 0}, {-g, 0, -1}, {-g, 0, 1}};
  for (auto& x : v) x.normalize();
  return v;
}

StateVector bloch_state(const Vector3d& r) { return StateVector::from_bloch(r); }

EffectVector projective_effect(const Vector3d& n) {
  if (std::abs(n.norm() - 1.0) > 1e-9) throw ValidationError("projective_effect needs a unit vector");
  VectorXd c(4);
  c << 0.5, 0.5 * n;
  return EffectVector(std::move(c));
}

StateVector depolarize_state(const StateVector& s, double w) {
  check_weight(w, "w");
  VectorXd c = s.components();
  c.tail(c.size() - 1) *= w;
  return StateVector(std::move(c));
}

EffectVector depolarize_effect(const EffectVector& e, double wp) {
  check_weight(wp, "w'");
  VectorXd c = e.components();
  c.tail(c.size() - 1) *= wp;
  return EffectVector(std::move(c));
}

std::vector<StateVector> fiducial_states() {
  std::vector<StateVector> out;
  for (int axis = 0; axis < 3; ++axis)
    for (double sign : {1.0, -1.0}) out.push_back(bloch_state(sign * Vector3d::Unit(axis)));
  return out;
}

std::vector<EffectVector> fiducial_effects() {
  const auto v = icosahedron_vertices();
  std::vector<EffectVector> out;
  for (std::size_t i = 0; i < 6; ++i) out.push_back(projective_effect(v[i]));
  return out;
}

std::pair<GroundTruth, ProbabilityMatrix> build_ground_truth(
    const std::vector<Vector3d>& state_dirs, const std::vector<Vector3d>& effect_dirs, double w,
    double wp, double counts_per_cell) {
  check_weight(w, "w");
  check_weight(wp, "w'");
  if (counts_per_cell < 1.0) throw ValidationError("counts per cell must be >= 1");
  const auto m = static_cast<Index>(state_dirs.size());
  const auto n = static_cast<Index>(effect_dirs.size()) + 1;
  if (m < 1 || n < 2) throw ValidationError("ground truth needs at least one state and effect");

  GroundTruth gt;
  gt.w = w;
  gt.wp = wp;
  gt.counts_per_cell = counts_per_cell;
  gt.model.states.resize(m, 4);
  gt.model.effects.resize(4, n);
  for (Index i = 0; i < m; ++i)
    gt.model.states.row(i) = depolarize_state(bloch_state(state_dirs[i]), w).components();
  gt.model.effects.col(0) = VectorXd::Unit(4, 0);
  for (Index j = 1; j < n; ++j)
    gt.model.effects.col(j) =
        depolarize_effect(projective_effect(effect_dirs[j - 1].normalized()), wp).components();

  MatrixXd d = gt.model.probabilities();
  // Remove rounding outside [0,1] and keep the unit column exact.
  d = d.cwiseMax(0.0).cwiseMin(1.0);
  d.col(0).setOnes();
  const Index rank = (w * wp == 0.0) ? 1 : numerical_rank(d);
  return {std::move(gt), ProbabilityMatrix(std::move(d), std::max<Index>(rank, 1))};
}

std::pair<GroundTruth, ProbabilityMatrix> build_ground_truth(Index m, Index n, double w, double wp,
                                                             const ExperimentDesign& design,
                                                             Geometry geometry,
                                                             double counts_per_cell) {
  if (design.m != m || design.n != n)
    throw ValidationError("design shape (" + std::to_string(design.m) + "x" +
                          std::to_string(design.n) + ") inconsistent with m=" + std::to_string(m) +
                          ", n=" + std::to_string(n));
  auto directions = [&](Index count) {
    if (count == 0) return std::vector<Vector3d>{};
    if (count == 1) return std::vector<Vector3d>{Vector3d(0, 0, 1)};
    return geometry == Geometry::sphere ? spiral_points(count) : circle_points(count);
  };

  std::vector<Vector3d> sdirs, edirs;
  if (design.mode == DesignMode::fiducial) {
    const Index f = design.fiducials;
    if (f != 6) throw ValidationError("fiducial ground truth uses the six Pauli/icosahedron sets");
    for (const auto& s : fiducial_states()) sdirs.push_back(s.bloch());
    for (const auto& e : fiducial_effects()) edirs.push_back(2.0 * e.bloch());
    for (const auto& v : directions(m - f)) sdirs.push_back(v);
    for (const auto& v : directions(n - 1 - f)) edirs.push_back(v);
  } else {
    sdirs = directions(m);
    edirs = directions(n - 1);
  }
  return build_ground_truth(sdirs, edirs, w, wp, counts_per_cell);
}

std::uint64_t cell_seed(std::uint64_t seed, Index i, Index j) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ static_cast<std::uint64_t>(i));
  return splitmix64(h ^ (static_cast<std::uint64_t>(j) << 32));
}

CountTable sample_counts(const ProbabilityMatrix& d, const ExperimentDesign& design,
                         double counts_per_cell, std::uint64_t seed, CountModel model) {
  if (counts_per_cell < 1.0) throw ValidationError("expected counts per cell must be >= 1");
  if (design.m != d.rows() || design.n != d.cols())
    throw ValidationError("design shape does not match the probability matrix");
  CountTable out;
  out.m = d.rows();
  out.n = d.cols();
  for (Index i = 0; i < out.m; ++i) {
    for (Index j = 1; j < out.n; ++j) {
      if (!design.mask(i, j)) continue;
      const double p = d.entries()(i, j);
      std::mt19937_64 rng(cell_seed(seed, i, j));
      std::int64_t n0 = 0, n1 = 0;
      for (int attempt = 0; attempt < 1000 && n0 + n1 == 0; ++attempt) {
        if (model == CountModel::poisson) {
          n0 = draw_poisson(rng, counts_per_cell * p);
          n1 = draw_poisson(rng, counts_per_cell * (1.0 - p));
        } else {
          const auto total = static_cast<std::int64_t>(std::llround(counts_per_cell));
          std::binomial_distribution<std::int64_t> dist(total, p);
          n0 = dist(rng);
          n1 = total - n0;
        }
      }
      if (n0 + n1 == 0)
        throw NumericalError("cell (" + std::to_string(i) + "," + std::to_string(j) +
                             ") produced zero counts");
      out.cells.push_back({i, j, n0, n1});
    }
  }
  return out;
}

CountTable resample_counts(const CountTable& counts, std::uint64_t seed) {
  CountTable out = counts;
  for (auto& c : out.cells) {
    std::mt19937_64 rng(cell_seed(seed, c.i, c.j));
    const auto n0 = static_cast<double>(c.n0), n1 = static_cast<double>(c.n1);
    std::int64_t a = 0, b = 0;
    for (int attempt = 0; attempt < 1000 && a + b == 0; ++attempt) {
      a = draw_poisson(rng, n0);
      b = draw_poisson(rng, n1);
    }
    if (a + b == 0) throw NumericalError("resampled cell produced zero counts");
    c.n0 = a;
    c.n1 = b;
  }
  return out;
}

FrequencyMatrix frequencies_from_counts(const CountTable& counts) {
  if (counts.m < 1 || counts.n < 2) throw ValidationError("count table needs m >= 1 and n >= 2");
  FrequencyMatrix f;
  f.values = MatrixXd::Zero(counts.m, counts.n);
  f.sigmas = MatrixXd::Ones(counts.m, counts.n);
  f.mask = MaskMatrix::Constant(counts.m, counts.n, false);
  f.exact_cols = {0};
  f.values.col(0).setOnes();
  f.sigmas.col(0).setZero();
  f.mask.col(0).setConstant(true);
  for (const auto& c : counts.cells) {
    if (c.i < 0 || c.i >= counts.m || c.j < 0 || c.j >= counts.n)
      throw ValidationError("count cell (" + std::to_string(c.i) + "," + std::to_string(c.j) +
                            ") outside the " + std::to_string(counts.m) + "x" +
                            std::to_string(counts.n) + " table");
    if (c.j == 0) throw ValidationError("the unit column is implicit and must not carry counts");
    if (c.n0 < 0 || c.n1 < 0 || c.n0 + c.n1 == 0)
      throw ValidationError("cell (" + std::to_string(c.i) + "," + std::to_string(c.j) +
                            ") needs non-negative counts with a positive total");
    if (f.mask(c.i, c.j))
      throw ValidationError("duplicate cell (" + std::to_string(c.i) + "," + std::to_string(c.j) + ")");
    const auto n0 = static_cast<double>(c.n0), n1 = static_cast<double>(c.n1);
    const double total = n0 + n1;
    f.values(c.i, c.j) = n0 / total;
    f.sigmas(c.i, c.j) =
        (c.n0 == 0 || c.n1 == 0) ? 1.0 / (total + 2.0) : std::sqrt(n0 * n1 / (total * total * total));
    f.mask(c.i, c.j) = true;
  }
  return f;
}

FrequencyMatrix sample_frequency_matrix(const ProbabilityMatrix& d, const ExperimentDesign& design,
                                        double counts_per_cell, std::uint64_t seed,
                                        CountModel model) {
  return frequencies_from_counts(sample_counts(d, design, counts_per_cell, seed, model));
}

}  // namespace gpt::synth
