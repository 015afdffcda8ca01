// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "voxprior/grid.hpp"

namespace voxprior {

struct TriMesh {
  std::vector<Vec3> vertices;                 // world space, meters
  std::vector<std::array<int, 3>> triangles;  // indices into vertices

  bool empty() const noexcept { return triangles.empty(); }
};

// Iso-surface of the field at `iso` with one layer of zero padding around the
// grid, so the surface is closed. Samples sit at voxel centers; a sample is
// inside when value >= iso. Triangles wind counter-clockwise seen from
// outside.
TriMesh marching_cubes(const ProbGrid& field, double iso = 0.5);

// Triangles (as cube-edge ids 0..11) emitted for one of the 256 corner
// configurations; bit c of `inside_mask` is corner c = x + 2y + 4z.
std::span<const std::array<int, 3>> marching_cubes_case(int inside_mask);

// Gives every voxel claimed by several grids to the claimant with the fewest
// occupied voxels (first in list order on ties).
std::vector<BinaryGrid> resolve_overlaps(const std::vector<BinaryGrid>& grids);

// Area-uniform surface samples; identical for identical (mesh, n, seed).
std::vector<Vec3> surface_sample(const TriMesh& mesh, int n, std::uint64_t seed);

// 0.5 * (mean over A of nearest distance to B + mean over B of nearest to A),
// unsquared Euclidean distances.
double chamfer_distance(const std::vector<Vec3>& a, const std::vector<Vec3>& b);

double triangle_area(const TriMesh& mesh, std::size_t t);

void write_obj(std::ostream& out, const TriMesh& mesh);
void write_obj(const std::string& path, const TriMesh& mesh);
TriMesh read_obj(std::istream& in);
TriMesh read_obj(const std::string& path);

}  // namespace voxprior
