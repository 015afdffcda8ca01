// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "voxprior/frustum.hpp"
#include "voxprior/grid.hpp"

namespace voxprior {

// Multi-channel float32 voxel container.
//
//   bytes 0..3   "VXGR"
//   bytes 4..7   header length N, uint32 little-endian
//   N bytes      UTF-8 JSON object: dims [dx,dy,dz], channels C, voxel_size,
//                origin [x,y,z], dtype "f32", optional "meta" object
//   payload      C*dx*dy*dz float32 little-endian, channel-major, x fastest
//
// The file must end exactly at the end of the payload.
struct VoxelGridFile {
  using MetaValue = std::variant<double, std::string>;

  GridFrame frame;
  int channels = 1;
  std::vector<float> payload;
  std::map<std::string, MetaValue> meta;

  std::span<const float> channel_values(int c) const;
  ProbGrid channel(int c) const;
  BinaryGrid mask(int c) const;  // value >= 0.5

  static VoxelGridFile from_grids(const std::vector<ProbGrid>& channels);
  static VoxelGridFile from_grid(const ProbGrid& grid) { return from_grids({grid}); }
};

inline constexpr char kVoxelGridMagic[4] = {'V', 'X', 'G', 'R'};

void write_voxel_grid(std::ostream& out, const VoxelGridFile& file);
void write_voxel_grid(const std::string& path, const VoxelGridFile& file);
// Throws MalformedInput on any structural problem, Io when the file cannot be
// opened.
VoxelGridFile read_voxel_grid(std::istream& in);
VoxelGridFile read_voxel_grid(const std::string& path);

// Four-channel representation packed as a VoxelGridFile (F1..F4 in order),
// with k, z_table and the table source in the metadata.
VoxelGridFile pack_representation(const FourChannelGrid& rep, double k);

// Scene manifest: a JSON object
//   { "camera": {fx, fy, cx, cy, width, height, cam_to_world: [16 row-major]},
//     "depth_file": raw float32 LE meters (0 = missing), row-major,
//     "label_file": raw uint16 LE (0 = background), row-major,
//     "z_table": optional meters }
// File paths are relative to the manifest's directory.
struct Scene {
  CameraModel camera;
  DepthObservation observation;
  std::optional<double> z_table;
};

Scene load_scene(const std::string& manifest_path);
void save_scene(const std::string& manifest_path, const Scene& scene,
                const std::string& depth_file = "depth.f32",
                const std::string& label_file = "labels.u16");

}  // namespace voxprior
