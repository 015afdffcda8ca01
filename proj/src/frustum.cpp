// SPDX-License-Identifier: Apache-2.0

#include "voxprior/frustum.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace voxprior {

void CameraModel::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "camera focal lengths must be positive");
  }
  if (width < 1 || height < 1) {
    throw Error(ErrorCode::InvalidArgument, "camera image size must be positive");
  }
  const Eigen::Matrix3d r = cam_to_world.linear();
  const double orth = (r.transpose() * r - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
  if (!(orth < 1e-6) || !(std::abs(r.determinant() - 1.0) < 1e-6)) {
    throw Error(ErrorCode::InvalidArgument, "camera rotation must be orthonormal with det +1");
  }
}

void DepthObservation::validate() const {
  const auto n = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  if (width < 1 || height < 1 || depth.size() != n || labels.size() != n) {
    throw Error(ErrorCode::MalformedInput, "depth/label buffers do not match image size");
  }
  for (float z : depth) {
    if (!(z >= 0.0f) || !std::isfinite(z)) {
      throw Error(ErrorCode::MalformedInput, "depth values must be finite and >= 0");
    }
  }
}

OrganizedCloud backproject(const DepthObservation& obs, const CameraModel& cam) {
  OrganizedCloud cloud{obs.width, obs.height, {}};
  cloud.points.resize(obs.depth.size());
  for (int v = 0; v < obs.height; ++v) {
    for (int u = 0; u < obs.width; ++u) {
      const std::size_t n = obs.pixel(u, v);
      const double z = obs.depth[n];
      if (!(z > 0.0)) continue;
      const Vec3 p_cam((u - cam.cx) * z / cam.fx, (v - cam.cy) * z / cam.fy, z);
      cloud.points[n] = cam.cam_to_world * p_cam;
    }
  }
  return cloud;
}

std::vector<Vec3> points_with_label(const OrganizedCloud& cloud, const DepthObservation& obs,
                                    std::uint16_t label) {
  std::vector<Vec3> out;
  for (std::size_t n = 0; n < cloud.points.size(); ++n) {
    if (obs.labels[n] == label && cloud.points[n]) out.push_back(*cloud.points[n]);
  }
  return out;
}

double max_pairwise_distance(const std::vector<Vec3>& points) {
  double best = 0.0;
  for (std::size_t a = 0; a < points.size(); ++a) {
    for (std::size_t b = a + 1; b < points.size(); ++b) {
      best = std::max(best, (points[a] - points[b]).squaredNorm());
    }
  }
  return std::sqrt(best);
}

GridFrame grid_frame_for_object(const std::vector<Vec3>& object_points, double z_table,
                                const FrameOptions& options) {
  if (object_points.empty()) throw Error(ErrorCode::EmptyObject, "object has no points");
  if (!(options.k > 0.0)) throw Error(ErrorCode::InvalidArgument, "k must be positive");
  if (options.d < 2) throw Error(ErrorCode::InvalidArgument, "grid resolution must be >= 2");
  if (!(options.min_voxel_size > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "minimum voxel size must be positive");
  }

  const double extent =
      std::max(max_pairwise_distance(object_points), 2.0 * options.min_voxel_size);
  const double side = options.k * extent;
  const double voxel = side / options.d;

  Vec3 centroid = Vec3::Zero();
  for (const Vec3& p : object_points) centroid += p;
  centroid /= static_cast<double>(object_points.size());

  const double first_center = -0.5 * side + 0.5 * voxel;
  const Vec3 origin(centroid.x() + first_center, centroid.y() + first_center, z_table);
  return GridFrame({options.d, options.d, options.d}, voxel, origin);
}

double estimate_table_height(const DepthObservation& obs, const CameraModel& cam) {
  constexpr double kBin = 0.005;
  const OrganizedCloud cloud = backproject(obs, cam);
  std::vector<double> heights;
  for (std::size_t n = 0; n < cloud.points.size(); ++n) {
    if (obs.labels[n] == 0 && cloud.points[n]) heights.push_back(cloud.points[n]->z());
  }
  if (heights.empty()) {
    throw Error(ErrorCode::NoBackground, "no background pixel with valid depth");
  }

  std::map<long long, std::size_t> histogram;
  for (double z : heights) ++histogram[static_cast<long long>(std::floor(z / kBin))];
  long long mode = histogram.begin()->first;
  std::size_t best = 0;
  for (const auto& [bin, count] : histogram) {
    if (count > best) {
      best = count;
      mode = bin;
    }
  }

  double sum = 0.0;
  std::size_t count = 0;
  for (double z : heights) {
    const auto bin = static_cast<long long>(std::floor(z / kBin));
    if (bin >= mode - 1 && bin <= mode + 1) {
      sum += z;
      ++count;
    }
  }
  return sum / static_cast<double>(count);
}

BinaryGrid voxelize(const std::vector<Vec3>& points, const GridFrame& frame) {
  BinaryGrid out(frame, 0);
  for (const Vec3& p : points) {
    const Index3 i = frame.locate(p);
    if (frame.contains(i)) out.at(i) = 1;
  }
  return out;
}

namespace {

Visibility classify_with(const Eigen::Isometry3d& world_to_cam, const CameraModel& cam,
                         const DepthObservation& obs, const GridFrame& frame,
                         const Index3& voxel) {
  const Vec3 p = world_to_cam * frame.world_center(voxel);
  if (!(p.z() > 0.0)) return Visibility::Unobserved;
  const double u = cam.fx * p.x() / p.z() + cam.cx;
  const double v = cam.fy * p.y() / p.z() + cam.cy;
  const double pu = std::floor(u + 0.5);
  const double pv = std::floor(v + 0.5);
  if (pu < 0.0 || pv < 0.0 || pu >= obs.width || pv >= obs.height) return Visibility::Unobserved;
  const double depth = obs.depth[obs.pixel(static_cast<int>(pu), static_cast<int>(pv))];
  if (!(depth > 0.0)) return Visibility::Unobserved;
  const double half = 0.5 * frame.voxel_size();
  if (p.z() < depth - half) return Visibility::ObservedEmpty;
  if (p.z() <= depth + half) return Visibility::Surface;
  return Visibility::Unobserved;
}

}  // namespace

Visibility classify_voxel(const CameraModel& cam, const DepthObservation& obs,
                          const GridFrame& frame, const Index3& voxel) {
  return classify_with(cam.cam_to_world.inverse(), cam, obs, frame, voxel);
}

VisibilityMasks carve_visibility(const CameraModel& cam, const DepthObservation& obs,
                                 const GridFrame& frame) {
  const Eigen::Isometry3d world_to_cam = cam.cam_to_world.inverse();
  VisibilityMasks out{BinaryGrid(frame, 0), BinaryGrid(frame, 0)};
  for (std::size_t n = 0; n < frame.size(); ++n) {
    switch (classify_with(world_to_cam, cam, obs, frame, frame.unlinear(n))) {
      case Visibility::ObservedEmpty: out.empty[n] = 1; break;
      case Visibility::Unobserved: out.unobserved[n] = 1; break;
      case Visibility::Surface: break;
    }
  }
  return out;
}

FourChannelGrid build_representation(const DepthObservation& obs, const CameraModel& cam,
                                     std::uint16_t object_id,
                                     const RepresentationOptions& options) {
  cam.validate();
  obs.validate();
  if (obs.width != cam.width || obs.height != cam.height) {
    throw Error(ErrorCode::MalformedInput, "observation size does not match camera");
  }
  if (object_id == 0 ||
      std::find(obs.labels.begin(), obs.labels.end(), object_id) == obs.labels.end()) {
    throw Error(ErrorCode::UnknownObject, "object id " + std::to_string(object_id) +
                                              " does not appear in the label image");
  }

  const OrganizedCloud cloud = backproject(obs, cam);
  const std::vector<Vec3> object = points_with_label(cloud, obs, object_id);
  if (object.empty()) {
    throw Error(ErrorCode::EmptyObject, "object " + std::to_string(object_id) +
                                            " has no pixel with valid depth");
  }
  std::vector<Vec3> others;
  for (std::size_t n = 0; n < cloud.points.size(); ++n) {
    if (obs.labels[n] != 0 && obs.labels[n] != object_id && cloud.points[n]) {
      others.push_back(*cloud.points[n]);
    }
  }

  FourChannelGrid rep;
  if (options.z_table) {
    rep.z_table = *options.z_table;
    rep.table_source = TableSource::Provided;
  } else {
    try {
      rep.z_table = estimate_table_height(obs, cam);
      rep.table_source = TableSource::Estimated;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NoBackground) throw;
      double lowest = object.front().z();
      for (const Vec3& p : object) lowest = std::min(lowest, p.z());
      rep.z_table = lowest;
      rep.table_source = TableSource::ObjectMinimum;
    }
  }

  rep.frame = grid_frame_for_object(object, rep.z_table, options.frame);
  rep.object = voxelize(object, rep.frame);
  rep.others = voxelize(others, rep.frame);
  VisibilityMasks masks = carve_visibility(cam, obs, rep.frame);
  rep.empty = std::move(masks.empty);
  rep.unobserved = std::move(masks.unobserved);

  // Observed-occupied voxels leave both visibility channels; surface-band
  // voxels not explained by an object (the table, mostly) count as unobserved.
  for (std::size_t n = 0; n < rep.frame.size(); ++n) {
    if (rep.object[n] || rep.others[n]) {
      rep.empty[n] = 0;
      rep.unobserved[n] = 0;
    } else if (!rep.empty[n]) {
      rep.unobserved[n] = 1;
    }
  }
  return rep;
}

}  // namespace voxprior
