#pragma once

// Ground-truth noisy-qubit models, experiment designs and simulated counts.

#include <cstdint>
#include <utility>
#include <vector>

#include "gpt/core.hpp"

namespace gpt::synth {

using Eigen::Vector3d;

enum class DesignMode { full_grid, fiducial };

// Which cells of the m x n frequency matrix are measured. Column 0 is the
// implicit unit measurement and is always "measured".
struct ExperimentDesign {
  Index m = 0;
  Index n = 0;  // includes the unit column
  MaskMatrix mask;
  DesignMode mode = DesignMode::full_grid;
  Index fiducials = 0;

  static ExperimentDesign full_grid(Index m, Index n);
  // First f rows and first f+1 columns measured; the rest unmeasured.
  static ExperimentDesign fiducial(Index m, Index n, Index f);

  // Measured preparation/measurement pairs excluding the unit column.
  Index measured_configurations() const;
};

struct GroundTruth {
  GptModel model;
  double w = 1.0;
  double wp = 1.0;
  double counts_per_cell = 1.0;
};

// Bloch directions for the generated preparations and measurements.
enum class Geometry {
  sphere,  // spiral on S^2 (qubit, rank 4)
  disk,    // equally spaced on the x-z great circle (rebit, rank 3)
};

// N points on a spiral from the south pole to the north pole.
std::vector<Vector3d> spiral_points(Index N);
// N equally spaced points on the x-z great circle, starting at the south pole.
std::vector<Vector3d> circle_points(Index N);
std::vector<Vector3d> icosahedron_vertices();

StateVector bloch_state(const Vector3d& r);
// (1/2, n/2); |n| must be 1 to within 1e-9.
EffectVector projective_effect(const Vector3d& n);

StateVector depolarize_state(const StateVector& s, double w);
EffectVector depolarize_effect(const EffectVector& e, double wp);

// The six Pauli eigenstates (+x, -x, +y, -y, +z, -z).
std::vector<StateVector> fiducial_states();
// Projective effects on six icosahedron vertices, one per antipodal pair.
std::vector<EffectVector> fiducial_effects();

// Explicit directions. Effects get the unit column prepended.
std::pair<GroundTruth, ProbabilityMatrix> build_ground_truth(
    const std::vector<Vector3d>& state_dirs, const std::vector<Vector3d>& effect_dirs, double w,
    double wp, double counts_per_cell = 1.0);

// Spiral (or circle) directions; fiducial designs place the fiducial states and
// effects first.
std::pair<GroundTruth, ProbabilityMatrix> build_ground_truth(
    Index m, Index n, double w, double wp, const ExperimentDesign& design,
    Geometry geometry = Geometry::sphere, double counts_per_cell = 1.0);

struct CountCell {
  Index i;
  Index j;
  std::int64_t n0;
  std::int64_t n1;
};

// Sparse photon counts for the non-unit measured cells.
struct CountTable {
  Index m = 0;
  Index n = 0;  // includes the implicit unit column
  std::vector<CountCell> cells;
};

enum class CountModel { poisson, binomial };

// Per-cell generator derived from (seed, i, j), independent of sampling order.
std::uint64_t cell_seed(std::uint64_t seed, Index i, Index j);

CountTable sample_counts(const ProbabilityMatrix& d, const ExperimentDesign& design,
                         double counts_per_cell, std::uint64_t seed,
                         CountModel model = CountModel::poisson);

// Each cell redrawn as n0' ~ Poisson(n0), n1' ~ Poisson(n1).
CountTable resample_counts(const CountTable& counts, std::uint64_t seed);

// f = n0/(n0+n1), sigma^2 = n0 n1 / (n0+n1)^3, floored at 1/(n0+n1+2) when
// either count is zero. Column 0 is exact.
FrequencyMatrix frequencies_from_counts(const CountTable& counts);

FrequencyMatrix sample_frequency_matrix(const ProbabilityMatrix& d, const ExperimentDesign& design,
                                        double counts_per_cell, std::uint64_t seed,
                                        CountModel model = CountModel::poisson);

}  // namespace gpt::synth
