// SPDX-License-Identifier: Apache-2.0

#include "voxprior/io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>

#include <json.hpp>

namespace voxprior {

namespace {

using nlohmann::json;

static_assert(sizeof(float) == 4);

std::uint32_t load_u32_le(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void store_u32_le(unsigned char* p, std::uint32_t v) {
  p[0] = static_cast<unsigned char>(v);
  p[1] = static_cast<unsigned char>(v >> 8);
  p[2] = static_cast<unsigned char>(v >> 16);
  p[3] = static_cast<unsigned char>(v >> 24);
}

[[noreturn]] void malformed(const std::string& what) { throw Error(ErrorCode::MalformedInput, what); }

std::string read_all(std::istream& in) {
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path);
  return read_all(in);
}

void write_file(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot open " + path + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::Io, "failed writing " + path);
}

template <typename T>
T get_field(const json& obj, const char* key) {
  if (!obj.is_object() || !obj.contains(key)) malformed(std::string("missing key \"") + key + "\"");
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    malformed(std::string("key \"") + key + "\" has the wrong type");
  }
}

double get_number(const json& obj, const char* key) {
  if (!obj.is_object() || !obj.contains(key) || !obj.at(key).is_number()) {
    malformed(std::string("missing numeric key \"") + key + "\"");
  }
  return obj.at(key).get<double>();
}

}  // namespace

std::span<const float> VoxelGridFile::channel_values(int c) const {
  if (c < 0 || c >= channels) throw Error(ErrorCode::InvalidArgument, "channel index out of range");
  const std::size_t n = frame.size();
  return std::span<const float>(payload).subspan(static_cast<std::size_t>(c) * n, n);
}

ProbGrid VoxelGridFile::channel(int c) const {
  const auto values = channel_values(c);
  ProbGrid g(frame);
  for (std::size_t n = 0; n < values.size(); ++n) g[n] = values[n];
  return g;
}

BinaryGrid VoxelGridFile::mask(int c) const {
  const auto values = channel_values(c);
  BinaryGrid g(frame);
  for (std::size_t n = 0; n < values.size(); ++n) g[n] = values[n] >= 0.5f ? 1 : 0;
  return g;
}

VoxelGridFile VoxelGridFile::from_grids(const std::vector<ProbGrid>& grids) {
  if (grids.empty()) throw Error(ErrorCode::InvalidArgument, "no channels");
  VoxelGridFile f;
  f.frame = grids.front().frame();
  f.channels = static_cast<int>(grids.size());
  f.payload.reserve(grids.size() * f.frame.size());
  for (const ProbGrid& g : grids) {
    require_same_frame(g.frame(), f.frame);
    for (double v : g.values()) f.payload.push_back(static_cast<float>(v));
  }
  return f;
}

void write_voxel_grid(std::ostream& out, const VoxelGridFile& file) {
  if (file.payload.size() != static_cast<std::size_t>(file.channels) * file.frame.size()) {
    throw Error(ErrorCode::InvalidArgument, "payload size does not match dims and channels");
  }
  const Index3& d = file.frame.dims();
  const Vec3& o = file.frame.origin();
  json header = {
      {"dims", {d.x, d.y, d.z}},
      {"channels", file.channels},
      {"voxel_size", file.frame.voxel_size()},
      {"origin", {o.x(), o.y(), o.z()}},
      {"dtype", "f32"},
  };
  if (!file.meta.empty()) {
    json meta = json::object();
    for (const auto& [key, value] : file.meta) {
      std::visit([&](const auto& v) { meta[key] = v; }, value);
    }
    header["meta"] = std::move(meta);
  }
  const std::string text = header.dump();

  std::string bytes(8 + text.size() + 4 * file.payload.size(), '\0');
  auto* p = reinterpret_cast<unsigned char*>(bytes.data());
  std::memcpy(p, kVoxelGridMagic, 4);
  store_u32_le(p + 4, static_cast<std::uint32_t>(text.size()));
  std::memcpy(p + 8, text.data(), text.size());
  unsigned char* q = p + 8 + text.size();
  for (float v : file.payload) {
    store_u32_le(q, std::bit_cast<std::uint32_t>(v));
    q += 4;
  }
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::Io, "failed writing voxel grid");
}

void write_voxel_grid(const std::string& path, const VoxelGridFile& file) {
  std::ostringstream out(std::ios::binary);
  write_voxel_grid(out, file);
  write_file(path, out.str());
}

VoxelGridFile read_voxel_grid(std::istream& in) {
  const std::string bytes = read_all(in);
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  if (bytes.size() < 8 || std::memcmp(p, kVoxelGridMagic, 4) != 0) malformed("not a VXGR file");
  const std::uint32_t header_len = load_u32_le(p + 4);
  if (header_len > bytes.size() - 8) malformed("header length exceeds file size");

  json header;
  try {
    header = json::parse(bytes.begin() + 8, bytes.begin() + 8 + header_len);
  } catch (const json::exception& e) {
    malformed(std::string("header is not valid JSON: ") + e.what());
  }
  if (!header.is_object()) malformed("header is not a JSON object");
  if (get_field<std::string>(header, "dtype") != "f32") malformed("unsupported dtype");

  const auto dims = get_field<std::vector<long long>>(header, "dims");
  const auto origin = get_field<std::vector<double>>(header, "origin");
  const auto channels = get_field<long long>(header, "channels");
  const double voxel_size = get_number(header, "voxel_size");
  if (dims.size() != 3 || origin.size() != 3) malformed("dims and origin need three entries");
  for (long long v : dims) {
    if (v < 1 || v > (1 << 20)) malformed("dims out of range");
  }
  if (channels < 1 || channels > 1024) malformed("channel count out of range");

  VoxelGridFile f;
  try {
    f.frame = GridFrame({static_cast<int>(dims[0]), static_cast<int>(dims[1]), static_cast<int>(dims[2])},
                        voxel_size, Vec3(origin[0], origin[1], origin[2]));
  } catch (const Error& e) {
    malformed(e.what());
  }
  f.channels = static_cast<int>(channels);

  const std::size_t count = static_cast<std::size_t>(channels) * f.frame.size();
  const std::size_t body = bytes.size() - 8 - header_len;
  if (body != 4 * count) malformed("payload length does not match header");
  f.payload.resize(count);
  const unsigned char* q = p + 8 + header_len;
  for (std::size_t n = 0; n < count; ++n, q += 4) {
    const float v = std::bit_cast<float>(load_u32_le(q));
    if (!(v >= 0.0f && v <= 1.0f)) malformed("payload value outside [0, 1]");
    f.payload[n] = v;
  }

  if (header.contains("meta")) {
    const json& meta = header.at("meta");
    if (!meta.is_object()) malformed("meta must be an object");
    for (const auto& [key, value] : meta.items()) {
      if (value.is_number()) {
        f.meta[key] = value.get<double>();
      } else if (value.is_string()) {
        f.meta[key] = value.get<std::string>();
      }
    }
  }
  return f;
}

VoxelGridFile read_voxel_grid(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path);
  return read_voxel_grid(in);
}

VoxelGridFile pack_representation(const FourChannelGrid& rep, double k) {
  VoxelGridFile f = VoxelGridFile::from_grids(
      {to_prob(rep.object), to_prob(rep.others), to_prob(rep.empty), to_prob(rep.unobserved)});
  f.meta["k"] = k;
  f.meta["z_table"] = rep.z_table;
  switch (rep.table_source) {
    case TableSource::Provided: f.meta["table_source"] = std::string("provided"); break;
    case TableSource::Estimated: f.meta["table_source"] = std::string("estimated"); break;
    case TableSource::ObjectMinimum: f.meta["table_source"] = std::string("object_minimum"); break;
  }
  return f;
}

namespace {

template <typename T>
std::vector<T> read_raw(const std::string& path, std::size_t count) {
  const std::string bytes = read_file(path);
  if (bytes.size() != count * sizeof(T)) {
    malformed(path + ": expected " + std::to_string(count * sizeof(T)) + " bytes, found " +
              std::to_string(bytes.size()));
  }
  std::vector<T> out(count);
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  for (std::size_t n = 0; n < count; ++n, p += sizeof(T)) {
    if constexpr (sizeof(T) == 4) {
      out[n] = std::bit_cast<T>(load_u32_le(p));
    } else {
      out[n] = static_cast<T>(p[0] | (p[1] << 8));
    }
  }
  return out;
}

template <typename T>
std::string raw_bytes(const std::vector<T>& values) {
  std::string bytes(values.size() * sizeof(T), '\0');
  auto* p = reinterpret_cast<unsigned char*>(bytes.data());
  for (const T& v : values) {
    if constexpr (sizeof(T) == 4) {
      store_u32_le(p, std::bit_cast<std::uint32_t>(v));
    } else {
      p[0] = static_cast<unsigned char>(v);
      p[1] = static_cast<unsigned char>(v >> 8);
    }
    p += sizeof(T);
  }
  return bytes;
}

}  // namespace

Scene load_scene(const std::string& manifest_path) {
  json m;
  try {
    m = json::parse(read_file(manifest_path));
  } catch (const json::exception& e) {
    malformed(std::string("manifest is not valid JSON: ") + e.what());
  }
  if (!m.is_object() || !m.contains("camera")) malformed("manifest lacks a camera object");
  const json& c = m.at("camera");

  Scene scene;
  CameraModel& cam = scene.camera;
  cam.fx = get_number(c, "fx");
  cam.fy = get_number(c, "fy");
  cam.cx = get_number(c, "cx");
  cam.cy = get_number(c, "cy");
  cam.width = get_field<int>(c, "width");
  cam.height = get_field<int>(c, "height");
  const auto pose = get_field<std::vector<double>>(c, "cam_to_world");
  if (pose.size() != 16) malformed("cam_to_world needs 16 entries");
  Eigen::Matrix4d mat;
  for (int r = 0; r < 4; ++r) {
    for (int col = 0; col < 4; ++col) mat(r, col) = pose[static_cast<std::size_t>(4 * r + col)];
  }
  if ((mat.row(3) - Eigen::RowVector4d(0, 0, 0, 1)).cwiseAbs().maxCoeff() > 1e-9) {
    malformed("cam_to_world must be a rigid transform");
  }
  cam.cam_to_world.matrix() = mat;
  try {
    cam.validate();
  } catch (const Error& e) {
    malformed(e.what());
  }

  const auto base = std::filesystem::path(manifest_path).parent_path();
  const auto depth_path = (base / get_field<std::string>(m, "depth_file")).string();
  const auto label_path = (base / get_field<std::string>(m, "label_file")).string();
  const std::size_t pixels = static_cast<std::size_t>(cam.width) * static_cast<std::size_t>(cam.height);

  DepthObservation& obs = scene.observation;
  obs.width = cam.width;
  obs.height = cam.height;
  obs.depth = read_raw<float>(depth_path, pixels);
  obs.labels = read_raw<std::uint16_t>(label_path, pixels);
  obs.validate();

  if (m.contains("z_table") && !m.at("z_table").is_null()) scene.z_table = get_number(m, "z_table");
  return scene;
}

void save_scene(const std::string& manifest_path, const Scene& scene, const std::string& depth_file,
                const std::string& label_file) {
  const CameraModel& cam = scene.camera;
  std::vector<double> pose;
  const Eigen::Matrix4d mat = cam.cam_to_world.matrix();
  for (int r = 0; r < 4; ++r) {
    for (int col = 0; col < 4; ++col) pose.push_back(mat(r, col));
  }
  json m = {
      {"camera",
       {{"fx", cam.fx}, {"fy", cam.fy}, {"cx", cam.cx}, {"cy", cam.cy}, {"width", cam.width},
        {"height", cam.height}, {"cam_to_world", pose}}},
      {"depth_file", depth_file},
      {"label_file", label_file},
  };
  if (scene.z_table) m["z_table"] = *scene.z_table;
  const auto base = std::filesystem::path(manifest_path).parent_path();
  write_file((base / depth_file).string(), raw_bytes(scene.observation.depth));
  write_file((base / label_file).string(), raw_bytes(scene.observation.labels));
  write_file(manifest_path, m.dump(2) + "\n");
}

}  // namespace voxprior
