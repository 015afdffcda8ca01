// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "voxprior/frustum.hpp"
#include "voxprior/grid.hpp"
#include "voxprior/io.hpp"

namespace voxprior::testing {

using Rng = std::mt19937_64;

GridFrame unit_frame(Index3 dims);

// Values uniform in [lo, hi]; each voxel is zero with probability `empty`.
ProbGrid random_grid(Rng& rng, const GridFrame& frame, double lo = 0.0, double hi = 1.0,
                     double empty = 0.0);

// 3x3x3 mixed-probability grid used across stability and CLI tests, with its
// support grid (one other-object voxel beside the object at mid height).
ProbGrid fixture_g1();
ProbGrid fixture_g1_others();

// Deterministic 2x2x1 slab resting on the table layer of a 4x4x3 grid.
ProbGrid slab_on_table();

// Cup-shaped object whose observed part starts three layers above the table.
// The occluded region is the cup's footprint in the three lowest layers, where
// the prior is 0.6 on the wall ring above the base and 0.3 on the base.
struct FloatingMug {
  ProbGrid grid;
  BinaryGrid occluded;
  ProbGrid others;
};
FloatingMug floating_mug(int d = 32);

// Sum of a few random Gaussian bumps on a d^3 grid, rescaled to [0, 1].
ProbGrid smooth_field(Rng& rng, int d);

// ---- synthetic depth scenes ------------------------------------------------

struct Box {
  Vec3 lo, hi;
  std::uint16_t label = 1;
};

// Boxes standing on a finite square table, seen by a pinhole camera. Depth is
// rendered analytically per pixel centre and stored as float32, as a sensor
// would.
struct BoxScene {
  CameraModel camera;
  double table_z = 0.0;
  double table_half = 0.35;
  std::vector<Box> boxes;

  struct Hit {
    double depth;  // camera-frame z
    std::uint16_t label;
  };
  std::optional<Hit> cast(int u, int v) const;
  DepthObservation render() const;
};

CameraModel look_at(const Vec3& eye, const Vec3& target, int width, int height, double f);

// Two boxes on a table with the second partly hiding the first.
BoxScene random_two_box_scene(Rng& rng);

// ---- files -----------------------------------------------------------------

// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

std::string read_bytes(const std::string& path);

// ---- processes -------------------------------------------------------------

struct ProcessResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

// Runs argv[0] with the given arguments (no shell), capturing both streams.
ProcessResult run_process(const std::vector<std::string>& argv);

}  // namespace voxprior::testing
