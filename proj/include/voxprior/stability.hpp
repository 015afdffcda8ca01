// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "voxprior/grid.hpp"

namespace voxprior {

// Real-valued per-voxel field (gradients, support probabilities).
using ScalarField = DenseGrid<double>;

enum class CdfMode {
  Normal,  // Phi(mu / sigma), step function when sigma == 0
  Step,    // sign of mu only: 1, 0.5 on a tie, 0
};

struct StabilityParams {
  int n_directions = 25;
  double prob_clamp = 1e-6;
  CdfMode cdf_mode = CdfMode::Normal;
  // Also count the lateral neighbour on the -s side as a support candidate.
  bool opposite_lateral = false;

  void validate() const;
};

// Horizontal face-neighbour offset closest in angle to +s. Diagonal ties go
// to the axis clockwise of s.
Index3 lateral_offset(const Vec3& direction);

// Voxels that can support `voxel` against toppling along `direction`: the one
// directly below and the lateral neighbour toward +s (and -s if requested).
// Offsets falling outside the grid are dropped.
std::vector<Index3> support_candidates(const GridFrame& frame, const Index3& voxel,
                                       const Vec3& direction, bool opposite_lateral = false);

// h_s(i) = 1 - prod over the support candidates of (1 - V_other); voxels in
// the bottom layer rest on the table and get 1.
ScalarField support_prob(const ProbGrid& others, const Vec3& direction,
                         bool opposite_lateral = false);

// P(i^s > M^s(v)) for v ~ Bernoulli(V): normal approximation of the signed
// sum D = sum_j (i^s - j^s) X_j.
double com_exceedance_prob(const ProbGrid& object, const Index3& voxel, const Vec3& direction,
                           CdfMode mode = CdfMode::Normal);

// Exceedance probability of every voxel for one direction, O(voxels).
ScalarField com_exceedance_field(const ProbGrid& object, const Vec3& direction,
                                 CdfMode mode = CdfMode::Normal);

// log P(stable) = sum_s log(1 - u_s), u_s = prod_i [1 - V(i) P_i^s h_s(i)],
// with 1 - u_s floored at prob_clamp.
double stability_log_prob(const ProbGrid& object, const ProbGrid& others,
                          const StabilityParams& params = {});

// Per-voxel ascent direction for stability_log_prob. Exceedance
// probabilities are held fixed and every voxel other than the differentiated
// one enters through its indicators V >= 0.5 and V_other >= 0.5, which keeps
// the products from underflowing on large grids. All entries are >= 0.
ScalarField stability_gradient(const ProbGrid& object, const ProbGrid& others,
                               const StabilityParams& params = {});

struct EquilibriumReport {
  bool stable = false;
  std::vector<int> failing_directions;  // indices into the direction set
  std::vector<Vec3> failing_vectors;
};

// Binary static-equilibrium test: stable iff along every direction some
// supported voxel lies at or beyond the projected center of mass.
EquilibriumReport check_static_equilibrium(const BinaryGrid& shape, const BinaryGrid& support,
                                           const StabilityParams& params = {});

}  // namespace voxprior
