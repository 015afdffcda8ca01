// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Geometry>

#include "voxprior/grid.hpp"

namespace voxprior {

// Pinhole camera. Pixel (u, v) is the integer column/row whose center sits at
// image coordinate (u, v); camera looks down +z, x right, y down.
struct CameraModel {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 0;
  int height = 0;
  Eigen::Isometry3d cam_to_world = Eigen::Isometry3d::Identity();

  // Throws InvalidArgument unless fx, fy > 0, image size positive and the
  // rotation is orthonormal with determinant +1.
  void validate() const;
};

// Row-major depth (meters, 0 = missing) and instance labels (0 = background).
struct DepthObservation {
  int width = 0;
  int height = 0;
  std::vector<float> depth;
  std::vector<std::uint16_t> labels;

  std::size_t pixel(int u, int v) const noexcept {
    return static_cast<std::size_t>(v) * static_cast<std::size_t>(width) +
           static_cast<std::size_t>(u);
  }
  void validate() const;
};

// One world point per pixel with valid depth, in row-major pixel order.
struct OrganizedCloud {
  int width = 0;
  int height = 0;
  std::vector<std::optional<Vec3>> points;

  const std::optional<Vec3>& at(int u, int v) const {
    return points[static_cast<std::size_t>(v) * static_cast<std::size_t>(width) +
                  static_cast<std::size_t>(u)];
  }
};

OrganizedCloud backproject(const DepthObservation& obs, const CameraModel& cam);

// World points of all pixels whose label equals `label`.
std::vector<Vec3> points_with_label(const OrganizedCloud& cloud, const DepthObservation& obs,
                                    std::uint16_t label);

struct FrameOptions {
  double k = 4.0;                   // side length multiplier on the object extent
  int d = 32;                       // voxels per side
  double min_voxel_size = 0.005;    // object extent is floored at two of these
};

// Cubic frame of side k * extent centered on the object's centroid, shifted
// vertically so the table height coincides with the centers of voxel layer 0.
GridFrame grid_frame_for_object(const std::vector<Vec3>& object_points, double z_table,
                                const FrameOptions& options = {});

// Largest pairwise distance within a point set.
double max_pairwise_distance(const std::vector<Vec3>& points);

// Dominant height of background points (5 mm histogram, mean of the modal
// bin and its two neighbours).
double estimate_table_height(const DepthObservation& obs, const CameraModel& cam);

BinaryGrid voxelize(const std::vector<Vec3>& points, const GridFrame& frame);

// Per-voxel visibility classification from the voxel center's projection.
enum class Visibility : std::uint8_t {
  ObservedEmpty,  // in front of the observed surface
  Surface,        // within half a voxel of the observed depth
  Unobserved,     // behind the surface, outside the image, behind the camera or no depth
};

struct VisibilityMasks {
  BinaryGrid empty;       // channel 3
  BinaryGrid unobserved;  // channel 4
};

Visibility classify_voxel(const CameraModel& cam, const DepthObservation& obs,
                          const GridFrame& frame, const Index3& voxel);

VisibilityMasks carve_visibility(const CameraModel& cam, const DepthObservation& obs,
                                 const GridFrame& frame);

enum class TableSource : std::uint8_t { Provided, Estimated, ObjectMinimum };

struct FourChannelGrid {
  GridFrame frame;
  BinaryGrid object;      // F1
  BinaryGrid others;      // F2
  BinaryGrid empty;       // F3
  BinaryGrid unobserved;  // F4
  double z_table = 0.0;
  TableSource table_source = TableSource::Provided;
};

struct RepresentationOptions {
  FrameOptions frame;
  std::optional<double> z_table;  // estimated from the background when unset
};

FourChannelGrid build_representation(const DepthObservation& obs, const CameraModel& cam,
                                     std::uint16_t object_id,
                                     const RepresentationOptions& options = {});

}  // namespace voxprior
