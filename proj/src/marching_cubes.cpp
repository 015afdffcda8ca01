// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <array>
#include <unordered_map>
#include <vector>

#include "voxprior/meshing.hpp"

namespace voxprior {

namespace {

// Cube corner c has offset (c & 1, (c >> 1) & 1, (c >> 2) & 1).
struct Edge {
  int a, b;  // corners, b = a + axis bit
  int axis;
};

constexpr std::array<Edge, 12> kEdges = {{
    {0, 1, 0}, {2, 3, 0}, {4, 5, 0}, {6, 7, 0},
    {0, 2, 1}, {1, 3, 1}, {4, 6, 1}, {5, 7, 1},
    {0, 4, 2}, {1, 5, 2}, {2, 6, 2}, {3, 7, 2},
}};

int edge_between(int p, int q) {
  for (int e = 0; e < 12; ++e) {
    if ((kEdges[e].a == p && kEdges[e].b == q) || (kEdges[e].a == q && kEdges[e].b == p)) return e;
  }
  return -1;
}

// Corners of each face, counter-clockwise seen from outside the cube.
std::array<std::array<int, 4>, 6> face_corners() {
  std::array<std::array<int, 4>, 6> faces{};
  int f = 0;
  for (int axis = 0; axis < 3; ++axis) {
    const int u = (axis + 1) % 3;
    const int v = (axis + 2) % 3;
    for (int side = 0; side < 2; ++side) {
      auto corner = [&](int cu, int cv) { return (side << axis) | (cu << u) | (cv << v); };
      if (side == 1) {
        faces[f++] = {corner(0, 0), corner(1, 0), corner(1, 1), corner(0, 1)};
      } else {
        faces[f++] = {corner(0, 0), corner(0, 1), corner(1, 1), corner(1, 0)};
      }
    }
  }
  return faces;
}

// True when two cube edges lie on a common face.
bool share_face(int e1, int e2) {
  static const auto faces = face_corners();
  for (const auto& q : faces) {
    int hits = 0;
    for (int k = 0; k < 4; ++k) {
      const int e = edge_between(q[static_cast<std::size_t>(k)], q[static_cast<std::size_t>((k + 1) % 4)]);
      hits += e == e1 || e == e2;
    }
    if (hits == 2) return true;
  }
  return false;
}

// Triangulates loop[i..j] without chords between crossings on a common cube
// face. Such a chord could also be emitted by the neighbouring cube, making
// the edge non-manifold; every loop the contour rule produces admits a
// triangulation that avoids them.
bool triangulate_loop(const std::vector<int>& loop, int i, int j,
                      std::vector<std::array<int, 3>>& tris) {
  if (j - i < 2) return true;
  const std::size_t mark = tris.size();
  for (int k = i + 1; k < j; ++k) {
    const auto at = [&](int n) { return loop[static_cast<std::size_t>(n)]; };
    if ((k - i > 1 && share_face(at(i), at(k))) || (j - k > 1 && share_face(at(k), at(j)))) continue;
    // Segments run with the inside on their left seen from outside, so the
    // loop is clockwise around the outward normal; emit it reversed.
    tris.push_back({at(i), at(j), at(k)});
    if (triangulate_loop(loop, i, k, tris) && triangulate_loop(loop, k, j, tris)) return true;
    tris.resize(mark);
  }
  return false;
}

// Each face contributes contour segments joining the crossings on its border.
// Where a face has two diagonal inside corners, each inside corner is cut off
// on its own. The rule only looks at the face's own corners, so two cubes
// sharing a face always agree on its segments.
std::vector<std::array<int, 3>> build_case(int mask) {
  static const auto faces = face_corners();
  std::array<int, 12> next;
  next.fill(-1);
  for (const auto& q : faces) {
    auto in = [&](int k) { return ((mask >> q[static_cast<std::size_t>(k % 4)]) & 1) != 0; };
    for (int k = 0; k < 4; ++k) {
      if (!(in(k) && !in(k + 1))) continue;
      // inside -> outside crossing on border edge k; pair it with the nearest
      // outside -> inside crossing walking backwards.
      for (int back = 1; back <= 4; ++back) {
        const int j = (k - back + 4) % 4;
        if (!in(j) && in(j + 1)) {
          next[static_cast<std::size_t>(edge_between(q[static_cast<std::size_t>(k)],
                                                     q[static_cast<std::size_t>((k + 1) % 4)]))] =
              edge_between(q[static_cast<std::size_t>(j)], q[static_cast<std::size_t>((j + 1) % 4)]);
          break;
        }
      }
    }
  }

  std::vector<std::array<int, 3>> tris;
  std::array<bool, 12> used{};
  for (int start = 0; start < 12; ++start) {
    if (next[static_cast<std::size_t>(start)] < 0 || used[static_cast<std::size_t>(start)]) continue;
    std::vector<int> loop;
    for (int e = start; !used[static_cast<std::size_t>(e)]; e = next[static_cast<std::size_t>(e)]) {
      used[static_cast<std::size_t>(e)] = true;
      loop.push_back(e);
    }
    triangulate_loop(loop, 0, static_cast<int>(loop.size()) - 1, tris);
  }
  return tris;
}

const std::array<std::vector<std::array<int, 3>>, 256>& case_table() {
  static const auto table = [] {
    std::array<std::vector<std::array<int, 3>>, 256> t;
    for (int m = 0; m < 256; ++m) t[static_cast<std::size_t>(m)] = build_case(m);
    return t;
  }();
  return table;
}

}  // namespace

std::span<const std::array<int, 3>> marching_cubes_case(int inside_mask) {
  return case_table()[static_cast<std::size_t>(inside_mask & 0xff)];
}

TriMesh marching_cubes(const ProbGrid& field, double iso) {
  if (!(iso > 0.0 && iso < 1.0)) throw Error(ErrorCode::InvalidArgument, "iso value must lie in (0, 1)");
  const GridFrame& f = field.frame();
  const Index3& d = f.dims();

  // Padded sample lookup: indices -1 and d read as zero.
  auto sample = [&](int x, int y, int z) {
    const Index3 i{x, y, z};
    return f.contains(i) ? field.at(i) : 0.0;
  };

  // Lattice of the padded grid, (d + 2) samples per axis starting at -1.
  const long long px = d.x + 2, py = d.y + 2;
  auto lattice_id = [&](int x, int y, int z) {
    return (static_cast<long long>(x) + 1) + px * ((static_cast<long long>(y) + 1) + py * (z + 1));
  };

  TriMesh mesh;
  std::unordered_map<long long, int> vertex_of_edge;
  auto vertex = [&](int x, int y, int z, const Edge& e) {
    const int ax = x + (e.a & 1), ay = y + ((e.a >> 1) & 1), az = z + ((e.a >> 2) & 1);
    const long long key = lattice_id(ax, ay, az) * 3 + e.axis;
    auto [it, inserted] = vertex_of_edge.try_emplace(key, static_cast<int>(mesh.vertices.size()));
    if (inserted) {
      const int bx = x + (e.b & 1), by = y + ((e.b >> 1) & 1), bz = z + ((e.b >> 2) & 1);
      const double va = sample(ax, ay, az);
      const double vb = sample(bx, by, bz);
      // Clamped away from the endpoints so no two vertices coincide.
      const double t = std::clamp((iso - va) / (vb - va), 1e-4, 1.0 - 1e-4);
      Vec3 p(ax, ay, az);
      p[e.axis] += t;
      mesh.vertices.push_back(f.origin() + f.voxel_size() * p);
    }
    return it->second;
  };

  for (int z = -1; z < d.z; ++z) {
    for (int y = -1; y < d.y; ++y) {
      for (int x = -1; x < d.x; ++x) {
        int mask = 0;
        for (int c = 0; c < 8; ++c) {
          if (sample(x + (c & 1), y + ((c >> 1) & 1), z + ((c >> 2) & 1)) >= iso) mask |= 1 << c;
        }
        if (mask == 0 || mask == 255) continue;
        for (const auto& tri : marching_cubes_case(mask)) {
          mesh.triangles.push_back({vertex(x, y, z, kEdges[static_cast<std::size_t>(tri[0])]),
                                    vertex(x, y, z, kEdges[static_cast<std::size_t>(tri[1])]),
                                    vertex(x, y, z, kEdges[static_cast<std::size_t>(tri[2])])});
        }
      }
    }
  }
  return mesh;
}

}  // namespace voxprior
