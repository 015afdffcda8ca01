// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "fixtures.hpp"
#include "voxprior/io.hpp"

namespace voxprior {
namespace {

using testing::Rng;

std::string encode(const VoxelGridFile& f) {
  std::ostringstream out(std::ios::binary);
  write_voxel_grid(out, f);
  return out.str();
}

VoxelGridFile decode(const std::string& bytes) {
  std::istringstream in(bytes, std::ios::binary);
  return read_voxel_grid(in);
}

std::string with_header(const std::string& header, const std::string& payload) {
  std::string out = "VXGR";
  const auto n = static_cast<std::uint32_t>(header.size());
  for (int k = 0; k < 4; ++k) out.push_back(static_cast<char>((n >> (8 * k)) & 0xff));
  return out + header + payload;
}

std::string floats(std::initializer_list<float> values) {
  std::string out;
  for (float v : values) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    for (int k = 0; k < 4; ++k) out.push_back(static_cast<char>((bits >> (8 * k)) & 0xff));
  }
  return out;
}

void expect_malformed(const std::string& bytes, const char* why) {
  try {
    decode(bytes);
    ADD_FAILURE() << "accepted: " << why;
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MalformedInput) << why;
  }
}

TEST(VoxelGridFile, ByteLayout) {
  const GridFrame f({2, 1, 1}, 0.5, Vec3(1, 2, 3));
  const VoxelGridFile file = VoxelGridFile::from_grid(ProbGrid(f, std::vector<double>{0.25, 1.0}));
  const std::string bytes = encode(file);
  ASSERT_GE(bytes.size(), 8u);
  EXPECT_EQ(bytes.substr(0, 4), "VXGR");
  std::uint32_t n = 0;
  for (int k = 0; k < 4; ++k) n |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[4 + k])) << (8 * k);
  ASSERT_EQ(bytes.size(), 8 + n + 8);
  const auto header = nlohmann::json::parse(bytes.substr(8, n));
  EXPECT_EQ(header.at("dims"), nlohmann::json({2, 1, 1}));
  EXPECT_EQ(header.at("channels"), 1);
  EXPECT_EQ(header.at("voxel_size"), 0.5);
  EXPECT_EQ(header.at("origin"), nlohmann::json({1.0, 2.0, 3.0}));
  EXPECT_EQ(header.at("dtype"), "f32");
  EXPECT_EQ(bytes.substr(8 + n), floats({0.25f, 1.0f}));
}

TEST(VoxelGridFile, RoundTripIsBitExact) {
  Rng rng(21);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  const GridFrame f({5, 3, 4}, 0.0123, Vec3(-0.1, 0.37, 1.0 / 3.0));
  VoxelGridFile file;
  file.frame = f;
  file.channels = 3;
  for (std::size_t n = 0; n < 3 * f.size(); ++n) file.payload.push_back(u(rng));
  file.payload[7] = std::nextafter(0.0f, 1.0f);  // denormal survives
  file.meta["k"] = 4.0;
  file.meta["note"] = std::string("ok");

  const std::string bytes = encode(file);
  const VoxelGridFile back = decode(bytes);
  EXPECT_TRUE(back.frame.same_as(f));
  EXPECT_EQ(back.channels, 3);
  ASSERT_EQ(back.payload.size(), file.payload.size());
  EXPECT_EQ(std::memcmp(back.payload.data(), file.payload.data(), 4 * file.payload.size()), 0);
  EXPECT_EQ(back.meta, file.meta);
  EXPECT_EQ(encode(back), bytes);

  testing::TempDir dir;
  write_voxel_grid(dir.file("g.vxg"), file);
  EXPECT_EQ(testing::read_bytes(dir.file("g.vxg")), bytes);
  EXPECT_EQ(encode(read_voxel_grid(dir.file("g.vxg"))), bytes);
}

TEST(VoxelGridFile, ChannelsAndMasks) {
  const GridFrame f({2, 1, 1}, 1.0, Vec3::Zero());
  const VoxelGridFile file = VoxelGridFile::from_grids(
      {ProbGrid(f, std::vector<double>{0.1, 0.6}), ProbGrid(f, std::vector<double>{0.5, 0.49})});
  EXPECT_EQ(file.channel(1)[0], 0.5);
  EXPECT_EQ(file.channel(0)[1], static_cast<double>(0.6f));
  EXPECT_EQ(file.mask(1)[0], 1);
  EXPECT_EQ(file.mask(1)[1], 0);
  EXPECT_THROW(file.channel(2), Error);
  EXPECT_THROW(VoxelGridFile::from_grids({}), Error);
  EXPECT_THROW(VoxelGridFile::from_grids({ProbGrid(f, 0.0), ProbGrid(GridFrame({1, 1, 1}, 1.0, Vec3::Zero()), 0.0)}),
               Error);
}

TEST(VoxelGridFile, RejectsMalformedInput) {
  const std::string good_header =
      R"({"dims":[1,1,1],"channels":1,"voxel_size":0.1,"origin":[0,0,0],"dtype":"f32"})";
  EXPECT_NO_THROW(decode(with_header(good_header, floats({0.5f}))));

  expect_malformed("", "empty");
  expect_malformed("VXG", "short");
  expect_malformed("VXGQ" + with_header(good_header, floats({0.5f})).substr(4), "magic");
  expect_malformed(with_header(good_header, floats({0.5f})).substr(0, 20), "truncated header");
  expect_malformed(with_header(good_header, ""), "missing payload");
  expect_malformed(with_header(good_header, floats({0.5f, 0.5f})), "trailing bytes");
  expect_malformed(with_header(good_header, floats({1.5f})), "out of range");
  expect_malformed(with_header(good_header, floats({std::nanf("")})), "nan");
  expect_malformed(with_header("{not json", floats({0.5f})), "json");
  expect_malformed(with_header("[1,2]", floats({0.5f})), "not an object");
  expect_malformed(with_header(R"({"dims":[1,1,1],"channels":1,"voxel_size":0.1,"origin":[0,0,0],"dtype":"f64"})",
                               floats({0.5f})),
                   "dtype");
  expect_malformed(with_header(R"({"dims":[1,1],"channels":1,"voxel_size":0.1,"origin":[0,0,0],"dtype":"f32"})",
                               floats({0.5f})),
                   "dims");
  expect_malformed(with_header(R"({"dims":[1,1,0],"channels":1,"voxel_size":0.1,"origin":[0,0,0],"dtype":"f32"})", ""),
                   "zero dim");
  expect_malformed(with_header(R"({"dims":[1,1,1],"channels":1,"voxel_size":-1,"origin":[0,0,0],"dtype":"f32"})",
                               floats({0.5f})),
                   "voxel size");
  expect_malformed(with_header(R"({"dims":[1,1,1],"voxel_size":0.1,"origin":[0,0,0],"dtype":"f32"})", floats({0.5f})),
                   "missing channels");
  expect_malformed(with_header(R"({"dims":[1,1,1],"channels":"1","voxel_size":0.1,"origin":[0,0,0],"dtype":"f32"})",
                               floats({0.5f})),
                   "wrong type");
}

TEST(VoxelGridFile, MissingFileIsIoError) {
  try {
    read_voxel_grid("/nonexistent/grid.vxg");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Io);
  }
}

TEST(Scene, SaveLoadRoundTrip) {
  Rng rng(31);
  const testing::BoxScene box = testing::random_two_box_scene(rng);
  Scene scene{box.camera, box.render(), 0.0};
  testing::TempDir dir;
  save_scene(dir.file("scene.json"), scene);
  const Scene back = load_scene(dir.file("scene.json"));
  EXPECT_EQ(back.camera.fx, scene.camera.fx);
  EXPECT_EQ(back.camera.cy, scene.camera.cy);
  EXPECT_EQ(back.camera.width, scene.camera.width);
  EXPECT_TRUE(back.camera.cam_to_world.matrix() == scene.camera.cam_to_world.matrix());
  EXPECT_EQ(back.observation.depth, scene.observation.depth);
  EXPECT_EQ(back.observation.labels, scene.observation.labels);
  ASSERT_TRUE(back.z_table);
  EXPECT_EQ(*back.z_table, 0.0);
  EXPECT_EQ(testing::read_bytes(dir.file("depth.f32")).size(), 4u * 128 * 96);

  scene.z_table.reset();
  save_scene(dir.file("scene.json"), scene);
  EXPECT_FALSE(load_scene(dir.file("scene.json")).z_table);
}

TEST(Scene, RejectsMalformedManifests) {
  Rng rng(32);
  const testing::BoxScene box = testing::random_two_box_scene(rng);
  testing::TempDir dir;
  save_scene(dir.file("scene.json"), Scene{box.camera, box.render(), std::nullopt});
  const std::string manifest = testing::read_bytes(dir.file("scene.json"));

  auto expect_code = [&](const std::string& text, ErrorCode code, const char* why) {
    std::ofstream(dir.file("bad.json"), std::ios::binary) << text;
    try {
      load_scene(dir.file("bad.json"));
      ADD_FAILURE() << why;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), code) << why;
    }
  };
  auto edit = [&](auto&& fn) {
    auto j = nlohmann::json::parse(manifest);
    fn(j);
    return j.dump();
  };
  expect_code("{", ErrorCode::MalformedInput, "json");
  expect_code("{}", ErrorCode::MalformedInput, "no camera");
  expect_code(edit([](auto& j) { j["camera"]["fx"] = -1; }), ErrorCode::MalformedInput, "fx");
  expect_code(edit([](auto& j) { j["camera"]["width"] = 127; }), ErrorCode::MalformedInput, "size");
  expect_code(edit([](auto& j) { j["camera"]["cam_to_world"] = {1, 0, 0}; }), ErrorCode::MalformedInput, "pose");
  expect_code(edit([](auto& j) { j["camera"]["cam_to_world"][0] = 2.0; }), ErrorCode::MalformedInput,
              "not rigid");
  expect_code(edit([](auto& j) { j.erase("depth_file"); }), ErrorCode::MalformedInput, "no depth");
  expect_code(edit([](auto& j) { j["label_file"] = "missing.u16"; }), ErrorCode::Io, "missing file");

  std::ofstream(dir.file("depth.f32"), std::ios::binary) << "abc";
  expect_code(manifest, ErrorCode::MalformedInput, "short depth");
}

TEST(PackRepresentation, ChannelsAndMeta) {
  Rng rng(33);
  const testing::BoxScene box = testing::random_two_box_scene(rng);
  RepresentationOptions opt;
  opt.frame.d = 16;
  const FourChannelGrid rep = build_representation(box.render(), box.camera, 1, opt);
  const VoxelGridFile f = pack_representation(rep, 4.0);
  EXPECT_EQ(f.channels, 4);
  EXPECT_EQ(f.mask(0), rep.object);
  EXPECT_EQ(f.mask(1), rep.others);
  EXPECT_EQ(f.mask(2), rep.empty);
  EXPECT_EQ(f.mask(3), rep.unobserved);
  EXPECT_EQ(std::get<double>(f.meta.at("k")), 4.0);
  EXPECT_EQ(std::get<std::string>(f.meta.at("table_source")), "estimated");
  for (float v : f.payload) EXPECT_TRUE(v == 0.0f || v == 1.0f);
}

}  // namespace
}  // namespace voxprior
