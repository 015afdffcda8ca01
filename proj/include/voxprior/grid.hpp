// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "voxprior/error.hpp"

namespace voxprior {

using Vec3 = Eigen::Vector3d;

struct Index3 {
  int x = 0;
  int y = 0;
  int z = 0;

  friend bool operator==(const Index3&, const Index3&) = default;
};

// Placement of a dense voxel lattice in the world. `origin` is the world
// position of the *center* of voxel (0,0,0); voxel centers are
// origin + index * voxel_size.
class GridFrame {
 public:
  GridFrame() = default;
  GridFrame(Index3 dims, double voxel_size, Vec3 origin);

  const Index3& dims() const noexcept { return dims_; }
  double voxel_size() const noexcept { return voxel_size_; }
  const Vec3& origin() const noexcept { return origin_; }

  std::size_t size() const noexcept {
    return static_cast<std::size_t>(dims_.x) * dims_.y * dims_.z;
  }

  bool contains(const Index3& i) const noexcept {
    return i.x >= 0 && i.y >= 0 && i.z >= 0 && i.x < dims_.x && i.y < dims_.y &&
           i.z < dims_.z;
  }

  // x-fastest storage: index = x + dx * (y + dy * z).
  std::size_t linear(const Index3& i) const noexcept {
    return static_cast<std::size_t>(i.x) +
           static_cast<std::size_t>(dims_.x) *
               (static_cast<std::size_t>(i.y) + static_cast<std::size_t>(dims_.y) * i.z);
  }

  Index3 unlinear(std::size_t n) const noexcept {
    const auto dx = static_cast<std::size_t>(dims_.x);
    const auto dy = static_cast<std::size_t>(dims_.y);
    return {static_cast<int>(n % dx), static_cast<int>((n / dx) % dy),
            static_cast<int>(n / (dx * dy))};
  }

  Vec3 world_center(const Index3& i) const noexcept {
    return origin_ + voxel_size_ * Vec3(i.x, i.y, i.z);
  }

  // Index of the voxel whose cell [center - h, center + h) contains p, where
  // h is half a voxel. The result may lie outside the grid.
  Index3 locate(const Vec3& p) const noexcept;

  // Exact equality of dims, voxel size and origin.
  bool same_as(const GridFrame& other) const noexcept;

 private:
  Index3 dims_{1, 1, 1};
  double voxel_size_ = 1.0;
  Vec3 origin_ = Vec3::Zero();
};

// Dense scalar field over a GridFrame.
template <typename T>
class DenseGrid {
 public:
  using value_type = T;

  DenseGrid() = default;
  explicit DenseGrid(GridFrame frame, T fill = T{})
      : frame_(std::move(frame)), values_(frame_.size(), fill) {}
  DenseGrid(GridFrame frame, std::vector<T> values)
      : frame_(std::move(frame)), values_(std::move(values)) {
    if (values_.size() != frame_.size()) {
      throw Error(ErrorCode::InvalidArgument, "grid value count does not match frame");
    }
  }

  const GridFrame& frame() const noexcept { return frame_; }
  std::size_t size() const noexcept { return values_.size(); }

  T& operator[](std::size_t n) noexcept { return values_[n]; }
  const T& operator[](std::size_t n) const noexcept { return values_[n]; }
  T& at(const Index3& i) noexcept { return values_[frame_.linear(i)]; }
  const T& at(const Index3& i) const noexcept { return values_[frame_.linear(i)]; }

  std::span<T> values() noexcept { return values_; }
  std::span<const T> values() const noexcept { return values_; }

  friend bool operator==(const DenseGrid& a, const DenseGrid& b) {
    return a.frame_.same_as(b.frame_) && a.values_ == b.values_;
  }

 private:
  GridFrame frame_;
  std::vector<T> values_;
};

// Occupancy probabilities in [0, 1].
using ProbGrid = DenseGrid<double>;
// Boolean occupancy stored one byte per voxel.
using BinaryGrid = DenseGrid<std::uint8_t>;

// Throws InvalidArgument when a value is NaN or outside [0, 1].
void require_probabilities(const ProbGrid& g);
void require_same_frame(const GridFrame& a, const GridFrame& b);

BinaryGrid binarize(const ProbGrid& g, double threshold = 0.5);
ProbGrid to_prob(const BinaryGrid& g);

double total_mass(const ProbGrid& g);
Vec3 center_of_mass(const ProbGrid& g);

double project_scalar(const Vec3& point, const Vec3& direction);
double project_scalar(const GridFrame& frame, const Index3& voxel, const Vec3& direction);

// Max pooling over factor^3 blocks; partial blocks at the upper border are
// padded with zeros.
ProbGrid coarsen(const ProbGrid& g, int factor);
GridFrame coarsen_frame(const GridFrame& frame, int factor);

enum class Neighborhood { Six = 6, Eighteen = 18, TwentySix = 26 };

// Offsets of the chosen neighborhood in a fixed order.
std::span<const Index3> neighbor_offsets(Neighborhood n);

struct Components {
  DenseGrid<std::int32_t> labels;  // 0 for unset voxels, 1..count otherwise
  int count = 0;
};

Components connected_components(const BinaryGrid& g, Neighborhood n = Neighborhood::TwentySix);

// Evenly spaced horizontal unit vectors, perpendicular to gravity (0,0,-1).
class DirectionSet {
 public:
  explicit DirectionSet(int n = 25);

  std::size_t size() const noexcept { return directions_.size(); }
  const Vec3& operator[](std::size_t j) const noexcept { return directions_[j]; }
  std::span<const Vec3> directions() const noexcept { return directions_; }

 private:
  std::vector<Vec3> directions_;
};

inline DirectionSet direction_set(int n = 25) { return DirectionSet(n); }

// Nearest-voxel resampling of g onto another frame; voxels whose center falls
// outside g read as `fill`.
ProbGrid resample_nearest(const ProbGrid& g, const GridFrame& target, double fill = 0.0);

}  // namespace voxprior
