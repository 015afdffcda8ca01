// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "voxprior/connectivity.hpp"
#include "voxprior/grid.hpp"
#include "voxprior/stability.hpp"

namespace voxprior {

struct RefineParams {
  double step = 0.1;
  int iterations = 50;
  double w_stability = 1.0;
  double w_connectivity = 1.0;
  double clamp_lo = 1e-4;
  double clamp_hi = 1.0 - 1e-4;
  double stop_tol = 1e-5;
  int max_halvings = 5;
  StabilityParams stability;
  ConnectivityParams connectivity;

  void validate() const;
};

struct RefineReport {
  double initial_stability = 0.0;
  double initial_connectivity = 0.0;
  double initial_objective = 0.0;
  // One entry per accepted iteration.
  std::vector<double> stability_logp;
  std::vector<double> connectivity_logp;
  std::vector<double> objective;
  std::vector<double> accepted_step;
  int iterations_run = 0;
  std::string stop_reason;
  int components = 0;
  EquilibriumReport equilibrium;
};

struct RefineResult {
  ProbGrid grid;
  RefineReport report;
};

// Projected gradient ascent on
//   w_stability * stability_log_prob + w_connectivity * connectivity_log_prob
// touching only voxels set in `occluded`. Writable voxels are kept inside
// [clamp_lo, clamp_hi]; every other value is returned bit-for-bit.
RefineResult refine(const ProbGrid& object, const BinaryGrid& occluded, const ProbGrid& others,
                    const RefineParams& params = {});

struct SceneObject {
  ProbGrid grid;
  BinaryGrid occluded;
};

// Probabilistic union of every grid except `skip`.
ProbGrid assemble_others(const std::vector<ProbGrid>& grids, std::size_t skip);

// Refines every object against the union of the others, `sweeps` times. Each
// sweep reads a snapshot of all estimates and visits objects in ascending
// total-mass order.
std::vector<ProbGrid> refine_scene(const std::vector<SceneObject>& objects,
                                   const RefineParams& params = {}, int sweeps = 1);

}  // namespace voxprior
