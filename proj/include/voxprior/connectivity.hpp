// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <vector>

#include "voxprior/grid.hpp"
#include "voxprior/stability.hpp"

namespace voxprior {

// Ordered chain of 26-adjacent voxels and log of the product of their
// occupancy probabilities (endpoints included, repeated voxels once).
struct Path {
  std::vector<Index3> voxels;
  double log_prob = 0.0;

  double prob() const;
  bool contains(const Index3& v) const;
};

struct ConnectivityParams {
  int coarsen_factor = 8;
  double anchor_threshold = 0.5;
  // Probabilities below this are raised to it during path search. Zero turns
  // clamping off, making empty voxels impassable.
  double prob_clamp = 1e-6;
  // Use every voxel with nonzero probability as an anchor instead of the
  // thresholded ones. Quadratic in the voxel count; meant for small grids.
  bool all_pairs = false;

  void validate() const;
};

// Single-source most-likely-path tree over the 26-neighbourhood. Path cost is
// the sum of -log V over visited voxels including the source; ties on cost
// keep the predecessor with the smaller linear index.
class PathTree {
 public:
  PathTree(const ProbGrid& grid, const Index3& source, double prob_clamp = 1e-6);

  const Index3& source() const noexcept { return source_; }
  bool reachable(const Index3& target) const;
  // log probability of the best path to target; -inf when unreachable.
  double log_prob(const Index3& target) const;
  // Voxels from the source to target inclusive. Throws Unreachable.
  std::vector<Index3> voxels_to(const Index3& target) const;
  Path path_to(const Index3& target) const;

 private:
  GridFrame frame_;
  Index3 source_;
  std::vector<double> cost_;    // accumulated -log probability
  std::vector<std::int64_t> parent_;
};

// log V with the path-search clamp applied; -inf for empty unclamped voxels.
double clamped_log(double v, double prob_clamp);

Path most_likely_path(const ProbGrid& grid, const Index3& a, const Index3& b,
                      double prob_clamp = 1e-6);

// Best a->c path followed by the best c->b path. Returns the a->b optimum when
// c already lies on it.
Path most_likely_path_through(const ProbGrid& grid, const Index3& a, const Index3& b,
                              const Index3& c, double prob_clamp = 1e-6);

// P(t* or t^c); P(t*) when c is absent or on t*.
double pair_connect_prob(const ProbGrid& grid, const Index3& a, const Index3& b,
                         const std::optional<Index3>& c = std::nullopt,
                         double prob_clamp = 1e-6);

// Anchor voxels of an already-coarsened grid.
std::vector<Index3> connectivity_anchors(const ProbGrid& coarse, const ConnectivityParams& params);

// Sum over unordered anchor pairs of log[V(a)V(b)P(t*) + 1 - V(a)V(b)],
// evaluated on the coarsened grid.
double connectivity_log_prob(const ProbGrid& grid, const ConnectivityParams& params = {});

// Per-voxel ascent direction for the connectivity objective, using the best
// path and the best path through each voxel. Only voxels inside `occluded`
// receive nonzero values; coarse values are written to every occluded voxel
// of their block.
ScalarField connectivity_gradient(const ProbGrid& grid, const BinaryGrid& occluded,
                                  const ConnectivityParams& params = {});

}  // namespace voxprior
