// SPDX-License-Identifier: Apache-2.0

#include "fixtures.hpp"

#include <fcntl.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include <Eigen/Geometry>

extern char** environ;

namespace voxprior::testing {

GridFrame unit_frame(Index3 dims) { return GridFrame(dims, 1.0, Vec3::Zero()); }

ProbGrid random_grid(Rng& rng, const GridFrame& frame, double lo, double hi, double empty) {
  std::uniform_real_distribution<double> value(lo, hi);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  ProbGrid g(frame, 0.0);
  for (std::size_t n = 0; n < g.size(); ++n) {
    const double c = coin(rng);
    const double x = value(rng);
    g[n] = c < empty ? 0.0 : x;
  }
  return g;
}

namespace {

GridFrame g1_frame() { return GridFrame({3, 3, 3}, 0.02, Vec3(0.1, -0.2, 0.0)); }

}  // namespace

ProbGrid fixture_g1() {
  return ProbGrid(g1_frame(), std::vector<double>{
                                  0.90, 0.20, 0.00, 0.70, 0.55, 0.10, 0.00, 0.35, 0.80,  // z=0
                                  0.15, 0.60, 0.05, 0.45, 0.95, 0.30, 0.25, 0.00, 0.50,  // z=1
                                  0.00, 0.40, 0.65, 0.20, 0.85, 0.00, 0.10, 0.30, 0.70,  // z=2
                              });
}

ProbGrid fixture_g1_others() {
  ProbGrid o(g1_frame(), 0.0);
  o.at({0, 0, 1}) = 0.9;
  o.at({2, 1, 1}) = 0.4;
  return o;
}

ProbGrid slab_on_table() {
  ProbGrid g(GridFrame({4, 4, 3}, 0.05, Vec3(-0.075, -0.075, 0.0)), 0.0);
  for (int y = 1; y <= 2; ++y)
    for (int x = 1; x <= 2; ++x) g.at({x, y, 0}) = 1.0;
  return g;
}

FloatingMug floating_mug(int d) {
  const GridFrame frame({d, d, d}, 0.01, Vec3(0.0, 0.0, 0.0));
  FloatingMug m{ProbGrid(frame, 0.0), BinaryGrid(frame, 0), ProbGrid(frame, 0.0)};
  const double c = 0.5 * d;
  const double outer = 0.22 * d;  // 7 voxels at d = 32
  const double inner = outer - 2.0;
  const int top = static_cast<int>(0.45 * d);
  for (int z = 0; z <= top; ++z)
    for (int y = 0; y < d; ++y)
      for (int x = 0; x < d; ++x) {
        const double r = std::hypot(x - c, y - c);
        if (r > outer) continue;
        const bool wall = r >= inner;
        const Index3 i{x, y, z};
        if (z < 3) {
          m.occluded.at(i) = 1;
          m.grid.at(i) = z == 0 ? 0.3 : (wall ? 0.6 : 0.0);
        } else if (wall) {
          m.grid.at(i) = 1.0;
        }
      }
  return m;
}

ProbGrid smooth_field(Rng& rng, int d) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const GridFrame f({d, d, d}, 0.01, Vec3(0.1, -0.2, 0.3));
  ProbGrid g(f, 0.0);
  const int bumps = 2 + static_cast<int>(u(rng) * 4);
  std::vector<std::pair<Vec3, double>> centers;
  for (int b = 0; b < bumps; ++b) {
    centers.emplace_back(Vec3(u(rng), u(rng), u(rng)) * (d - 1), 1.0 + u(rng) * 0.25 * d);
  }
  double hi = 0.0;
  for (std::size_t n = 0; n < g.size(); ++n) {
    const Index3 i = f.unlinear(n);
    const Vec3 p(i.x, i.y, i.z);
    double v = 0.0;
    for (const auto& [c, s] : centers) v += std::exp(-(p - c).squaredNorm() / (2 * s * s));
    g[n] = v;
    hi = std::max(hi, v);
  }
  for (std::size_t n = 0; n < g.size(); ++n) g[n] /= hi;
  return g;
}

std::optional<BoxScene::Hit> BoxScene::cast(int u, int v) const {
  const Vec3 dc((u - camera.cx) / camera.fx, (v - camera.cy) / camera.fy, 1.0);
  const Vec3 o = camera.cam_to_world.translation();
  const Vec3 dir = camera.cam_to_world.linear() * dc;

  double best = std::numeric_limits<double>::infinity();
  std::uint16_t label = 0;
  for (const Box& b : boxes) {
    double t0 = 0.0, t1 = best;
    bool miss = false;
    for (int k = 0; k < 3 && !miss; ++k) {
      if (dir[k] == 0.0) {
        miss = o[k] < b.lo[k] || o[k] > b.hi[k];
        continue;
      }
      double a = (b.lo[k] - o[k]) / dir[k];
      double c = (b.hi[k] - o[k]) / dir[k];
      if (a > c) std::swap(a, c);
      t0 = std::max(t0, a);
      t1 = std::min(t1, c);
      miss = t0 > t1;
    }
    if (!miss && t0 > 0.0 && t0 < best) {
      best = t0;
      label = b.label;
    }
  }
  if (dir.z() != 0.0) {
    const double t = (table_z - o.z()) / dir.z();
    const Vec3 p = o + t * dir;
    if (t > 0.0 && t < best && std::abs(p.x()) <= table_half && std::abs(p.y()) <= table_half) {
      best = t;
      label = 0;
    }
  }
  if (!std::isfinite(best)) return std::nullopt;
  // Camera-frame z equals the ray parameter because dc.z() == 1.
  return Hit{best, label};
}

DepthObservation BoxScene::render() const {
  DepthObservation obs;
  obs.width = camera.width;
  obs.height = camera.height;
  obs.depth.assign(static_cast<std::size_t>(obs.width) * obs.height, 0.0f);
  obs.labels.assign(obs.depth.size(), 0);
  for (int v = 0; v < obs.height; ++v)
    for (int u = 0; u < obs.width; ++u) {
      const auto hit = cast(u, v);
      if (!hit) continue;
      const std::size_t n = static_cast<std::size_t>(v) * obs.width + u;
      obs.depth[n] = static_cast<float>(hit->depth);
      obs.labels[n] = hit->label;
    }
  return obs;
}

CameraModel look_at(const Vec3& eye, const Vec3& target, int width, int height, double f) {
  const Vec3 z = (target - eye).normalized();
  const Vec3 x = z.cross(Vec3::UnitZ()).normalized();
  const Vec3 y = z.cross(x);
  CameraModel cam;
  cam.fx = cam.fy = f;
  cam.cx = 0.5 * (width - 1);
  cam.cy = 0.5 * (height - 1);
  cam.width = width;
  cam.height = height;
  Eigen::Matrix3d r;
  r.col(0) = x;
  r.col(1) = y;
  r.col(2) = z;
  cam.cam_to_world = Eigen::Isometry3d::Identity();
  cam.cam_to_world.linear() = r;
  cam.cam_to_world.translation() = eye;
  return cam;
}

BoxScene random_two_box_scene(Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto in = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };

  BoxScene s;
  const double azimuth = in(0.0, 2.0 * std::numbers::pi);
  const double elevation = in(0.6, 1.0);
  const double dist = in(0.55, 0.75);
  const Vec3 toward(std::cos(azimuth), std::sin(azimuth), 0.0);
  const Vec3 side(-toward.y(), toward.x(), 0.0);
  const Vec3 c1(in(-0.04, 0.04), in(-0.04, 0.04), 0.0);
  const Vec3 eye = c1 + dist * (std::cos(elevation) * toward + Vec3(0, 0, std::sin(elevation)));
  s.camera = look_at(eye, c1 + Vec3(0, 0, 0.04), 128, 96, 110.0);

  auto make_box = [&](const Vec3& c, std::uint16_t label) {
    const double hx = in(0.02, 0.045), hy = in(0.02, 0.045), h = in(0.05, 0.13);
    return Box{Vec3(c.x() - hx, c.y() - hy, s.table_z), Vec3(c.x() + hx, c.y() + hy, s.table_z + h),
               label};
  };
  s.boxes.push_back(make_box(c1, 1));
  const Vec3 c2 = c1 + in(0.1, 0.14) * toward + in(-0.04, 0.04) * side;
  s.boxes.push_back(make_box(c2, 2));
  return s;
}

TempDir::TempDir() {
  std::string tmpl = (std::filesystem::temp_directory_path() / "voxprior-test-XXXXXX").string();
  if (::mkdtemp(tmpl.data()) == nullptr) throw std::runtime_error("mkdtemp failed");
  path_ = tmpl;
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

std::string read_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ProcessResult run_process(const std::vector<std::string>& argv) {
  TempDir dir;
  const std::string out_path = dir.file("stdout");
  const std::string err_path = dir.file("stderr");
  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_addopen(&actions, 1, out_path.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
  posix_spawn_file_actions_addopen(&actions, 2, err_path.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
  std::vector<char*> args;
  for (const std::string& a : argv) args.push_back(const_cast<char*>(a.c_str()));
  args.push_back(nullptr);
  pid_t pid = 0;
  const int rc = posix_spawn(&pid, args[0], &actions, nullptr, args.data(), environ);
  posix_spawn_file_actions_destroy(&actions);
  if (rc != 0) throw std::runtime_error("cannot start " + argv.front());
  int status = 0;
  while (waitpid(pid, &status, 0) < 0) {
    if (errno != EINTR) throw std::runtime_error("waitpid failed");
  }
  ProcessResult r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : 128 + WTERMSIG(status);
  r.out = read_bytes(out_path);
  r.err = read_bytes(err_path);
  return r;
}

}  // namespace voxprior::testing
