// SPDX-License-Identifier: Apache-2.0

#include "voxprior/grid.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numbers>
#include <string>

namespace voxprior {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::MalformedInput: return "MalformedInput";
    case ErrorCode::Io: return "Io";
    case ErrorCode::FrameMismatch: return "FrameMismatch";
    case ErrorCode::ZeroMass: return "ZeroMass";
    case ErrorCode::EmptyObject: return "EmptyObject";
    case ErrorCode::UnknownObject: return "UnknownObject";
    case ErrorCode::NoBackground: return "NoBackground";
    case ErrorCode::NoAnchors: return "NoAnchors";
    case ErrorCode::Unreachable: return "Unreachable";
    case ErrorCode::EmptyShape: return "EmptyShape";
    case ErrorCode::EmptyMesh: return "EmptyMesh";
    case ErrorCode::EmptySet: return "EmptySet";
  }
  return "Unknown";
}

GridFrame::GridFrame(Index3 dims, double voxel_size, Vec3 origin)
    : dims_(dims), voxel_size_(voxel_size), origin_(std::move(origin)) {
  if (dims.x < 1 || dims.y < 1 || dims.z < 1) {
    throw Error(ErrorCode::InvalidArgument, "grid dims must be >= 1 on every axis");
  }
  if (!(voxel_size > 0.0) || !std::isfinite(voxel_size)) {
    throw Error(ErrorCode::InvalidArgument, "voxel size must be positive and finite");
  }
  if (!origin_.allFinite()) {
    throw Error(ErrorCode::InvalidArgument, "grid origin must be finite");
  }
}

Index3 GridFrame::locate(const Vec3& p) const noexcept {
  const Vec3 rel = (p - origin_) / voxel_size_;
  return {static_cast<int>(std::floor(rel.x() + 0.5)), static_cast<int>(std::floor(rel.y() + 0.5)),
          static_cast<int>(std::floor(rel.z() + 0.5))};
}

bool GridFrame::same_as(const GridFrame& other) const noexcept {
  return dims_ == other.dims_ && voxel_size_ == other.voxel_size_ && origin_ == other.origin_;
}

void require_probabilities(const ProbGrid& g) {
  for (double v : g.values()) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw Error(ErrorCode::InvalidArgument, "occupancy probability outside [0, 1]");
    }
  }
}

void require_same_frame(const GridFrame& a, const GridFrame& b) {
  if (!a.same_as(b)) {
    throw Error(ErrorCode::FrameMismatch, "grids do not share a frame");
  }
}

BinaryGrid binarize(const ProbGrid& g, double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "binarization threshold must lie in (0, 1)");
  }
  BinaryGrid out(g.frame());
  for (std::size_t n = 0; n < g.size(); ++n) out[n] = g[n] >= threshold ? 1 : 0;
  return out;
}

ProbGrid to_prob(const BinaryGrid& g) {
  ProbGrid out(g.frame());
  for (std::size_t n = 0; n < g.size(); ++n) out[n] = g[n] ? 1.0 : 0.0;
  return out;
}

double total_mass(const ProbGrid& g) {
  double m = 0.0;
  for (double v : g.values()) m += v;
  return m;
}

Vec3 center_of_mass(const ProbGrid& g) {
  const GridFrame& f = g.frame();
  double mass = 0.0;
  Vec3 weighted = Vec3::Zero();
  for (std::size_t n = 0; n < g.size(); ++n) {
    if (g[n] == 0.0) continue;
    const Index3 i = f.unlinear(n);
    mass += g[n];
    weighted += g[n] * Vec3(i.x, i.y, i.z);
  }
  if (!(mass > 0.0)) throw Error(ErrorCode::ZeroMass, "center of mass of an empty grid");
  // Accumulated in index units so the origin enters exactly once.
  return f.origin() + f.voxel_size() * (weighted / mass);
}

double project_scalar(const Vec3& point, const Vec3& direction) { return point.dot(direction); }

double project_scalar(const GridFrame& frame, const Index3& voxel, const Vec3& direction) {
  return frame.world_center(voxel).dot(direction);
}

GridFrame coarsen_frame(const GridFrame& frame, int factor) {
  if (factor < 1) throw Error(ErrorCode::InvalidArgument, "coarsening factor must be >= 1");
  const Index3& d = frame.dims();
  const Index3 cd{(d.x + factor - 1) / factor, (d.y + factor - 1) / factor,
                  (d.z + factor - 1) / factor};
  // A coarse voxel's center is the center of the fine block it covers.
  const double shift = 0.5 * (factor - 1) * frame.voxel_size();
  return GridFrame(cd, frame.voxel_size() * factor, frame.origin() + Vec3::Constant(shift));
}

ProbGrid coarsen(const ProbGrid& g, int factor) {
  if (factor == 1) return g;
  ProbGrid out(coarsen_frame(g.frame(), factor), 0.0);
  const GridFrame& f = g.frame();
  for (std::size_t n = 0; n < g.size(); ++n) {
    const Index3 i = f.unlinear(n);
    double& cell = out.at({i.x / factor, i.y / factor, i.z / factor});
    cell = std::max(cell, g[n]);
  }
  return out;
}

namespace {

std::vector<Index3> make_offsets(int max_nonzero) {
  std::vector<Index3> out;
  for (int dz = -1; dz <= 1; ++dz) {
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        const int nz = (dx != 0) + (dy != 0) + (dz != 0);
        if (nz == 0 || nz > max_nonzero) continue;
        out.push_back({dx, dy, dz});
      }
    }
  }
  return out;
}

}  // namespace

std::span<const Index3> neighbor_offsets(Neighborhood n) {
  static const std::vector<Index3> six = make_offsets(1);
  static const std::vector<Index3> eighteen = make_offsets(2);
  static const std::vector<Index3> twenty_six = make_offsets(3);
  switch (n) {
    case Neighborhood::Six: return six;
    case Neighborhood::Eighteen: return eighteen;
    case Neighborhood::TwentySix: return twenty_six;
  }
  return twenty_six;
}

Components connected_components(const BinaryGrid& g, Neighborhood n) {
  const GridFrame& f = g.frame();
  Components out{DenseGrid<std::int32_t>(f, 0), 0};
  const auto offsets = neighbor_offsets(n);
  std::deque<std::size_t> queue;
  for (std::size_t seed = 0; seed < g.size(); ++seed) {
    if (!g[seed] || out.labels[seed] != 0) continue;
    const std::int32_t label = ++out.count;
    out.labels[seed] = label;
    queue.push_back(seed);
    while (!queue.empty()) {
      const Index3 c = f.unlinear(queue.front());
      queue.pop_front();
      for (const Index3& o : offsets) {
        const Index3 q{c.x + o.x, c.y + o.y, c.z + o.z};
        if (!f.contains(q)) continue;
        const std::size_t qn = f.linear(q);
        if (!g[qn] || out.labels[qn] != 0) continue;
        out.labels[qn] = label;
        queue.push_back(qn);
      }
    }
  }
  return out;
}

DirectionSet::DirectionSet(int n) {
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "direction count must be >= 1");
  directions_.resize(static_cast<std::size_t>(n));
  const double step = 2.0 * std::numbers::pi / n;
  if (n % 4 == 0) {
    // Build one quadrant and rotate it by exact quarter turns so the set maps
    // onto itself bit-exactly under a 90 degree rotation about z.
    const int q = n / 4;
    for (int j = 0; j < q; ++j) {
      double c = std::cos(step * j);
      double s = std::sin(step * j);
      if (j == 0) {
        c = 1.0;
        s = 0.0;
      } else if (n % 8 == 0 && 2 * j == q) {
        c = s = std::sqrt(0.5);
      } else if (n % 8 == 0 && 2 * j > q) {
        // mirror of the lower half of the quadrant about the diagonal
        c = std::sin(step * (q - j));
        s = std::cos(step * (q - j));
      }
      Vec3 v(c, s, 0.0);
      for (int k = 0; k < 4; ++k) {
        directions_[static_cast<std::size_t>(j + k * q)] = v;
        v = Vec3(-v.y(), v.x(), 0.0);
      }
    }
  } else {
    for (int j = 0; j < n; ++j) {
      double c = std::cos(step * j);
      double s = std::sin(step * j);
      if (std::abs(c) < 1e-15) c = 0.0;
      if (std::abs(s) < 1e-15) s = 0.0;
      directions_[static_cast<std::size_t>(j)] = Vec3(c, s, 0.0);
    }
  }
}

ProbGrid resample_nearest(const ProbGrid& g, const GridFrame& target, double fill) {
  ProbGrid out(target, fill);
  for (std::size_t n = 0; n < out.size(); ++n) {
    const Index3 src = g.frame().locate(target.world_center(target.unlinear(n)));
    if (g.frame().contains(src)) out[n] = g.at(src);
  }
  return out;
}

}  // namespace voxprior
