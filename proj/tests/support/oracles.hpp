// SPDX-License-Identifier: Apache-2.0

// Slow, direct reference implementations used as test oracles. Nothing here
// shares code with the library beyond the plain data types.

#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "fixtures.hpp"
#include "voxprior/connectivity.hpp"
#include "voxprior/grid.hpp"
#include "voxprior/meshing.hpp"
#include "voxprior/stability.hpp"

namespace voxprior::testing {

// theta_j = 2 pi j / n, straight from cos/sin.
std::vector<Vec3> ref_directions(int n);

// Lateral lattice neighbour nearest +s by brute-force argmax over +-x, +-y.
Index3 ref_lateral(const Vec3& s);

// h_s(i) = 1 - prod over H_s(i) of (1 - W(i')), 1 on the table layer.
double ref_support(const ProbGrid& weights, const Index3& i, const Vec3& s,
                   bool opposite_lateral = false);

// P(i^s > M^s(v)) from an O(N) sum of signed projections in world space.
double ref_exceedance(const ProbGrid& v, const Index3& i, const Vec3& s,
                      CdfMode mode = CdfMode::Normal);

// The same event by enumerating every binary sample of the voxels with
// 0 < V < 1; an exact tie (D = 0) counts one half.
double enumerated_exceedance(const ProbGrid& v, const Index3& i, const Vec3& s);

// Product form of log P(stable) with the probability clamp.
double ref_stability_log_prob(const ProbGrid& v, const ProbGrid& others,
                              const StabilityParams& params = {});

// Per-voxel gradient: sum_s -u'_s / (1 - u_s), with u'_s in indicator form and
// 1 - u_s evaluated with every voxel but the differentiated one frozen to its
// indicator.
ProbGrid ref_stability_gradient(const ProbGrid& v, const ProbGrid& others,
                                const StabilityParams& params = {});

// log P(stable) with exceedance probabilities and every indicator frozen at
// the point `v`, voxel `i` replaced by the free value `x`.
class FrozenStability {
 public:
  FrozenStability(const ProbGrid& v, const ProbGrid& others, const StabilityParams& params = {});
  double value(std::size_t i, double x) const;
  // True when voxel i's terms cross the probability clamp between x0 and x1.
  bool crosses_clamp(std::size_t i, double x0, double x1) const;

 private:
  double stable(std::size_t s, std::size_t i, double x) const;

  std::vector<std::vector<double>> lever_;  // P * h_hat per direction
  std::vector<std::vector<double>> pivot_;  // lever * 1{V >= 0.5}
  double clamp_;
};

// Highest log-probability over simple 26-connected paths a -> b, optionally
// forced through c. Exhaustive depth-first search; partial paths that cannot
// beat the incumbent are cut since extending a path never raises it.
double exhaustive_best_path(const ProbGrid& v, const Index3& a, const Index3& b,
                            double prob_clamp, const std::optional<Index3>& through = {});

// log of prod over the distinct voxels of `voxels`.
double path_log_prob(const ProbGrid& v, const std::vector<Index3>& voxels, double prob_clamp);

// Connectivity objective with every pair's best path t* and best path through
// c, t^c, held fixed: sum over anchor pairs of log[q P_c + 1 - q], q = V(a)V(b),
// P_c = P(t*) when c lies on t* and 1 - (1 - P(t*))(1 - P(t^c)) otherwise.
// Works on the uncoarsened grid; c must not be an anchor.
class FrozenConnectivity {
 public:
  FrozenConnectivity(const ProbGrid& v, const ConnectivityParams& params, const Index3& c);
  double value(double x) const;  // objective with V(c) = x
  // True when t* and t^c of every pair are unchanged with V(c) = x.
  bool paths_unchanged(double x) const;
  std::size_t pairs() const { return pairs_.size(); }

 private:
  struct Pair {
    Index3 a, b;
    std::vector<Index3> best, through;
    bool on_best;
  };
  ProbGrid v_;
  ConnectivityParams params_;
  Index3 c_;
  std::vector<Pair> pairs_;
};

// Component labels by depth-first flood fill.
Components flood_fill(const BinaryGrid& g, Neighborhood n);

// True when both labelings induce the same partition of the set voxels.
bool same_partition(const Components& a, const Components& b);

// 0.5 (mean_a min_b |a-b| + mean_b min_a |a-b|) by a double loop.
double brute_chamfer(const std::vector<Vec3>& a, const std::vector<Vec3>& b);

struct ManifoldAudit {
  std::size_t edges = 0;
  std::size_t bad_edges = 0;       // edges not shared by exactly two triangles
  std::size_t misoriented = 0;     // edges traversed twice in the same direction
  std::size_t degenerate = 0;      // zero-area or repeated-index triangles
  std::size_t bad_indices = 0;
  long euler = 0;                  // V - E + F over referenced vertices
  double signed_volume = 0.0;

  bool closed_manifold() const { return edges > 0 && bad_edges == 0 && bad_indices == 0; }
};

ManifoldAudit audit_mesh(const TriMesh& m);

// Expected four-channel masks of a box scene computed straight from ray casts:
// occupancy from each pixel's float32 hit point, visibility from the cast
// through the pixel nearest each voxel centre's projection.
struct ExpectedChannels {
  BinaryGrid object, others, empty, unobserved;
};
ExpectedChannels ray_geometry_channels(const BoxScene& scene, std::uint16_t object_id,
                                       const GridFrame& frame);

}  // namespace voxprior::testing
