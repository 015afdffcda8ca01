// SPDX-License-Identifier: Apache-2.0

#include "voxprior/meshing.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include <Eigen/Geometry>

namespace voxprior {

std::vector<BinaryGrid> resolve_overlaps(const std::vector<BinaryGrid>& grids) {
  std::vector<BinaryGrid> out = grids;
  if (grids.empty()) return out;
  const GridFrame& frame = grids.front().frame();
  std::vector<std::size_t> count(grids.size(), 0);
  for (std::size_t k = 0; k < grids.size(); ++k) {
    require_same_frame(grids[k].frame(), frame);
    for (std::uint8_t b : grids[k].values()) count[k] += b != 0;
  }
  for (std::size_t n = 0; n < frame.size(); ++n) {
    std::size_t owner = grids.size();
    for (std::size_t k = 0; k < grids.size(); ++k) {
      if (!grids[k][n]) continue;
      if (owner == grids.size() || count[k] < count[owner]) owner = k;
    }
    if (owner == grids.size()) continue;
    for (std::size_t k = 0; k < grids.size(); ++k) {
      if (k != owner) out[k][n] = 0;
    }
  }
  return out;
}

double triangle_area(const TriMesh& mesh, std::size_t t) {
  const auto& tri = mesh.triangles[t];
  const Vec3& a = mesh.vertices[static_cast<std::size_t>(tri[0])];
  const Vec3& b = mesh.vertices[static_cast<std::size_t>(tri[1])];
  const Vec3& c = mesh.vertices[static_cast<std::size_t>(tri[2])];
  return 0.5 * (b - a).cross(c - a).norm();
}

std::vector<Vec3> surface_sample(const TriMesh& mesh, int n, std::uint64_t seed) {
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "sample count must be >= 1");
  std::vector<double> cumulative;
  cumulative.reserve(mesh.triangles.size());
  double total = 0.0;
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    total += triangle_area(mesh, t);
    cumulative.push_back(total);
  }
  if (!(total > 0.0)) throw Error(ErrorCode::EmptyMesh, "mesh has no surface to sample");

  std::mt19937_64 rng(seed);
  // 53-bit uniform in [0, 1), independent of the standard library's
  // distribution implementations.
  auto uniform = [&] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };

  std::vector<Vec3> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double pick = uniform() * total;
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), pick);
    if (it == cumulative.end()) --it;
    const auto& tri = mesh.triangles[static_cast<std::size_t>(it - cumulative.begin())];
    const double r1 = std::sqrt(uniform());
    const double r2 = uniform();
    const Vec3& a = mesh.vertices[static_cast<std::size_t>(tri[0])];
    const Vec3& b = mesh.vertices[static_cast<std::size_t>(tri[1])];
    const Vec3& c = mesh.vertices[static_cast<std::size_t>(tri[2])];
    out.push_back((1.0 - r1) * a + r1 * (1.0 - r2) * b + r1 * r2 * c);
  }
  return out;
}

namespace {

double mean_nearest(const std::vector<Vec3>& from, const std::vector<Vec3>& to) {
  double sum = 0.0;
  for (const Vec3& p : from) {
    double best = std::numeric_limits<double>::infinity();
    for (const Vec3& q : to) best = std::min(best, (p - q).squaredNorm());
    sum += std::sqrt(best);
  }
  return sum / static_cast<double>(from.size());
}

}  // namespace

double chamfer_distance(const std::vector<Vec3>& a, const std::vector<Vec3>& b) {
  if (a.empty() || b.empty()) throw Error(ErrorCode::EmptySet, "chamfer distance of an empty set");
  return 0.5 * (mean_nearest(a, b) + mean_nearest(b, a));
}

namespace {

void put_number(std::ostream& out, double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof(buf), v);
  out.write(buf, r.ptr - buf);
}

}  // namespace

void write_obj(std::ostream& out, const TriMesh& mesh) {
  for (const Vec3& v : mesh.vertices) {
    out << "v ";
    put_number(out, v.x());
    out << ' ';
    put_number(out, v.y());
    out << ' ';
    put_number(out, v.z());
    out << '\n';
  }
  for (const auto& t : mesh.triangles) {
    out << "f " << t[0] + 1 << ' ' << t[1] + 1 << ' ' << t[2] + 1 << '\n';
  }
}

void write_obj(const std::string& path, const TriMesh& mesh) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot open " + path + " for writing");
  write_obj(out, mesh);
  if (!out) throw Error(ErrorCode::Io, "failed writing " + path);
}

namespace {

double parse_double(std::string_view tok, std::size_t line) {
  double v = 0.0;
  const auto r = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (r.ec != std::errc{} || r.ptr != tok.data() + tok.size()) {
    throw Error(ErrorCode::MalformedInput, "bad number on OBJ line " + std::to_string(line));
  }
  return v;
}

int parse_index(std::string_view tok, std::size_t n_vertices, std::size_t line) {
  tok = tok.substr(0, tok.find('/'));
  long long v = 0;
  const auto r = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (r.ec != std::errc{} || r.ptr != tok.data() + tok.size() || v == 0) {
    throw Error(ErrorCode::MalformedInput, "bad face index on OBJ line " + std::to_string(line));
  }
  const long long idx = v > 0 ? v - 1 : static_cast<long long>(n_vertices) + v;
  if (idx < 0 || idx >= static_cast<long long>(n_vertices)) {
    throw Error(ErrorCode::MalformedInput, "face index out of range on OBJ line " + std::to_string(line));
  }
  return static_cast<int>(idx);
}

}  // namespace

TriMesh read_obj(std::istream& in) {
  TriMesh mesh;
  std::string text;
  std::size_t line_no = 0;
  while (std::getline(in, text)) {
    ++line_no;
    if (!text.empty() && text.back() == '\r') text.pop_back();
    std::istringstream ls(text);
    std::string tag;
    if (!(ls >> tag) || tag[0] == '#') continue;
    std::vector<std::string> toks;
    for (std::string t; ls >> t;) toks.push_back(t);
    if (tag == "v") {
      if (toks.size() < 3) throw Error(ErrorCode::MalformedInput, "short vertex line " + std::to_string(line_no));
      mesh.vertices.emplace_back(parse_double(toks[0], line_no), parse_double(toks[1], line_no),
                                 parse_double(toks[2], line_no));
    } else if (tag == "f") {
      if (toks.size() < 3) throw Error(ErrorCode::MalformedInput, "short face line " + std::to_string(line_no));
      std::vector<int> idx;
      for (const auto& t : toks) idx.push_back(parse_index(t, mesh.vertices.size(), line_no));
      for (std::size_t i = 1; i + 1 < idx.size(); ++i) mesh.triangles.push_back({idx[0], idx[i], idx[i + 1]});
    }
  }
  return mesh;
}

TriMesh read_obj(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path);
  return read_obj(in);
}

}  // namespace voxprior
