/*
 * svrkit: slice-to-volume reconstruction toolkit
 *
 * Copyright 2026 The svrkit Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>

#include "json.hpp"
#include "oracle.hpp"
#include "svrkit/config.hpp"
#include "svrkit/io.hpp"

namespace svr {
namespace {

namespace fs = std::filesystem;

template <typename T>
T read_at(const std::vector<std::uint8_t>& b, std::size_t off) {
  T v;
  std::memcpy(&v, b.data() + off, sizeof(T));
  return v;
}

Eigen::VectorXd float_rounded(const Eigen::VectorXd& x) { return x.cast<float>().cast<double>(); }

TEST(Nifti, HeaderLayout) {
  Rng rng(1);
  Volume v = oracle::random_volume(Dims(3, 4, 5), rng);
  v.spacing = 0.8;
  const auto bytes = io::encode_nifti(v, "hello");
  ASSERT_EQ(bytes.size(), 352u + 4u * 60u);
  EXPECT_EQ(read_at<std::int32_t>(bytes, 0), 348);
  EXPECT_EQ(read_at<std::int16_t>(bytes, 40), 3);
  EXPECT_EQ(read_at<std::int16_t>(bytes, 42), 3);
  EXPECT_EQ(read_at<std::int16_t>(bytes, 44), 4);
  EXPECT_EQ(read_at<std::int16_t>(bytes, 46), 5);
  EXPECT_EQ(read_at<std::int16_t>(bytes, 70), 16);
  EXPECT_EQ(read_at<float>(bytes, 80), 0.8f);
  EXPECT_EQ(read_at<float>(bytes, 108), 352.0f);
  EXPECT_EQ(std::string(reinterpret_cast<const char*>(bytes.data() + 344), 4), std::string("n+1\0", 4));
  EXPECT_EQ(read_at<float>(bytes, 352 + 4 * 7), float(v(1, 2, 0)));
}

TEST(Nifti, RoundTripFloat) {
  Rng rng(2);
  Volume v = oracle::random_volume(Dims(6, 5, 4), rng, -3, 3);
  v.spacing = 1.5;
  const io::NiftiImage back = io::decode_nifti(io::encode_nifti(v, "desc"));
  EXPECT_TRUE((back.volume.dims == v.dims).all());
  EXPECT_DOUBLE_EQ(back.volume.spacing, 1.5);
  EXPECT_EQ(back.volume.data, float_rounded(v.data));
  EXPECT_EQ(back.description, "desc");
}

TEST(Nifti, RoundTripUInt8) {
  Volume v(Dims(2, 2, 2));
  v.data << 0, 1, 0, 1, 1, 1, 0, 0;
  const io::NiftiImage back = io::decode_nifti(io::encode_nifti(v, "", io::NiftiType::UInt8));
  EXPECT_EQ(back.volume.data, v.data);
}

TEST(Nifti, RejectsCorruptInput) {
  Volume v(Dims(2, 2, 2));
  auto bytes = io::encode_nifti(v);
  auto truncated = bytes;
  truncated.resize(bytes.size() - 3);
  EXPECT_THROW(io::decode_nifti(truncated), Error);
  auto bad_magic = bytes;
  bad_magic[344] = 'x';
  EXPECT_THROW(io::decode_nifti(bad_magic), Error);
  EXPECT_THROW(io::decode_nifti(std::vector<std::uint8_t>(10, 0)), Error);
  EXPECT_THROW(io::read_nifti("/nonexistent/path.nii"), Error);
}

TEST(Stack, RoundTripKeepsGeometry) {
  Rng rng(3);
  const StackGeometry g = StackGeometry::for_grid(Dims(8, 6, 12), Axis::Y, 4.0, 4);
  const SliceStack s = oracle::random_stack(g, rng);
  const fs::path p = fs::temp_directory_path() / "svrkit_test_stack.nii";
  io::write_stack(p, s, 0.9);
  const io::StackFile back = io::read_stack(p);
  EXPECT_EQ(back.stack.geometry, g);
  EXPECT_FLOAT_EQ(float(back.voxel_mm), 0.9f);
  EXPECT_EQ(back.stack.data, float_rounded(s.data));
  const io::StackFile forced = io::read_stack(p, Axis::Z, 2.0, 2);
  EXPECT_EQ(forced.stack.geometry.axis, Axis::Z);
  EXPECT_EQ(forced.stack.geometry.K, g.K);
  fs::remove(p);
}

TEST(Stack, DescriptionParsing) {
  const StackGeometry g = io::parse_stack_description("svrkit stack axis=x spacing=2.5 slab=3", 4, 5, 6);
  EXPECT_EQ(g.axis, Axis::X);
  EXPECT_DOUBLE_EQ(g.spacing, 2.5);
  EXPECT_EQ(g.slab, 3);
  EXPECT_EQ(g.K, 4);
  EXPECT_THROW(io::parse_stack_description("plain volume", 1, 1, 1), Error);
  EXPECT_THROW(io::parse_stack_description("svrkit stack axis=x", 1, 1, 1), Error);
  EXPECT_THROW(io::parse_stack_description("svrkit stack axis=q spacing=1 slab=1", 1, 1, 1), Error);
}

TEST(Motion, RoundTripAndHeader) {
  Rng rng(4);
  const StackGeometry g = StackGeometry::for_grid(Dims(5, 6, 8), Axis::Z, 4.0, 4);
  const MotionStack m = oracle::random_motion(g, rng, 2.0);
  const auto bytes = io::encode_motion(m);
  ASSERT_EQ(bytes.size(), io::kMotionHeaderBytes + 4 * std::size_t(m.data.size()));
  EXPECT_EQ(std::string(reinterpret_cast<const char*>(bytes.data()), 4), "SVRM");
  EXPECT_EQ(read_at<std::uint32_t>(bytes, 4), io::kMotionVersion);
  EXPECT_EQ(read_at<std::uint32_t>(bytes, 8), 2u);
  const MotionStack back = io::decode_motion(bytes);
  EXPECT_EQ(back.geometry, g);
  EXPECT_EQ(back.data, float_rounded(m.data));
  auto bad = bytes;
  bad[4] = 9;
  EXPECT_THROW(io::decode_motion(bad), Error);
  bad = bytes;
  bad.pop_back();
  EXPECT_THROW(io::decode_motion(bad), Error);
}

TEST(Config, DefaultsAndValidation) {
  JobConfig c;
  for (const auto& k : JobConfig::keys()) {
    EXPECT_FALSE(k.help.empty()) << k.name;
    EXPECT_EQ(c.get(k.name), k.default_value);
  }
  const SimConfig s = c.sim();
  EXPECT_EQ(s.psf_width, 4);
  EXPECT_EQ(s.stride, 4);
  EXPECT_DOUBLE_EQ(s.euler_max, 20.0);
  EXPECT_DOUBLE_EQ(s.trans_max, 26.0);
  EXPECT_DOUBLE_EQ(s.noise_sigma, 0.01);
  EXPECT_THROW(c.set("no-such-key", 1), Error);
  EXPECT_THROW(c.set("levels", "three"), Error);
  EXPECT_THROW(c.set("levels", 2.5), Error);
  c.set("lambda", 2);
  EXPECT_DOUBLE_EQ(c.recon().lambda, 2.0);
  c.set("v-warmup", -1);
  EXPECT_THROW(c.recon(), Error);
  c.set("v-warmup", 0);
  EXPECT_EQ(c.recon().v_warmup, 0);
  c.set("basis", "affine");
  EXPECT_THROW(c.recon(), Error);
}

TEST(Config, MergeDocument) {
  JobConfig c;
  c.merge(nlohmann::json{{"axis", "x"}, {"seed", 5}, {"interleave", false}});
  const SimConfig s = c.sim();
  EXPECT_EQ(s.axis, Axis::X);
  EXPECT_EQ(s.seed, 5u);
  EXPECT_FALSE(s.interleave);
  EXPECT_THROW(c.merge(nlohmann::json{{"typo", 1}}), Error);
  EXPECT_THROW(c.merge(nlohmann::json::array()), Error);
  const fs::path p = fs::temp_directory_path() / "svrkit_test_config.json";
  io::write_file(p, std::vector<std::uint8_t>{'{', 'x'});
  EXPECT_THROW(c.merge_file(p.string()), Error);
  fs::remove(p);
}

}  // namespace
}  // namespace svr
