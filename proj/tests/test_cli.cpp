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

#include <filesystem>
#include <sstream>

#include "json.hpp"
#include "svrkit/cli.hpp"
#include "svrkit/io.hpp"
#include "svrkit/phantom.hpp"
#include "svrkit/rigid.hpp"

namespace svr {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Outcome {
  int code;
  std::string out, err;
};

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("svrkit_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  Outcome run(std::vector<std::string> args) const {
    args.insert(args.begin(), "svrkit");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli::run(int(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
  }

  std::string phantom(const Dims& d, const std::string& name = "ph.nii") const {
    io::write_nifti(path(name), blob_phantom(d));
    return path(name);
  }

  fs::path dir_;
};

std::vector<std::uint8_t> bytes(const std::string& p) { return io::read_file(p); }

TEST_F(Cli, SimulateIsDeterministic) {
  const std::string in = phantom(Dims(32, 32, 32));
  for (const char* tag : {"a", "b"}) {
    const Outcome o = run({"simulate", "--in", in, "--axis", "z", "--seed", "0", "--out-stack",
                           path(std::string(tag) + ".nii"), "--out-motion",
                           path(std::string(tag) + ".svrm")});
    ASSERT_EQ(o.code, 0) << o.err;
  }
  EXPECT_EQ(bytes(path("a.nii")), bytes(path("b.nii")));
  EXPECT_EQ(bytes(path("a.svrm")), bytes(path("b.svrm")));
  auto sidecar = [&](const char* name) {
    const auto raw = bytes(path(name));
    json doc = json::parse(std::string(raw.begin(), raw.end()));
    for (const char* key : {"out-stack", "out-motion", "out-sidecar"}) doc["config"].erase(key);
    return doc;
  };
  const json side = sidecar("a.json");
  EXPECT_EQ(side, sidecar("b.json"));
  EXPECT_EQ(side["seed"], 0);
  EXPECT_EQ(side["trajectory"].size(), 8u);
  EXPECT_TRUE(side.contains("gamma"));
  EXPECT_EQ(side["config"]["axis"], "z");
}

TEST_F(Cli, IdentityPipelineCopiesVolume) {
  const std::string in = phantom(Dims(12, 10, 8));
  const Outcome o = run({"simulate", "--in", in, "--euler-max", "0", "--trans-max", "0", "--noise", "0",
                         "--gamma-lo", "1", "--gamma-hi", "1", "--psf", "1", "--stride", "1",
                         "--out-stack", path("s.nii"), "--out-motion", path("m.svrm")});
  ASSERT_EQ(o.code, 0) << o.err;
  const auto a = bytes(in), b = bytes(path("s.nii"));
  ASSERT_EQ(a.size(), b.size());
  EXPECT_TRUE(std::equal(a.begin() + 352, a.end(), b.begin() + 352));
}

TEST_F(Cli, DefaultsSampleEveryFourthSlice) {
  io::write_nifti(path("big.nii"), Volume(Dims(256, 256, 256), 1.0, 0.5));
  const Outcome o = run({"simulate", "--in", path("big.nii"), "--out-stack", path("s.nii"),
                         "--out-motion", path("m.svrm")});
  ASSERT_EQ(o.code, 0) << o.err;
  const io::StackFile s = io::read_stack(path("s.nii"));
  EXPECT_EQ(s.stack.geometry.K, 64);
  EXPECT_EQ(s.stack.geometry.slab, 4);
}

TEST_F(Cli, ConfigFileAndFlagPrecedence) {
  const std::string in = phantom(Dims(16, 16, 16));
  const std::string cfg = path("job.json");
  const std::string text = json{{"axis", "x"}, {"seed", 3}, {"noise", 0.0}}.dump();
  io::write_file(cfg, std::vector<std::uint8_t>(text.begin(), text.end()));
  const Outcome o = run({"simulate", "--config", cfg, "--seed", "4", "--in", in, "--out-stack",
                         path("s.nii"), "--out-motion", path("m.svrm")});
  ASSERT_EQ(o.code, 0) << o.err;
  const auto raw = bytes(path("s.json"));
  const json side = json::parse(std::string(raw.begin(), raw.end()));
  EXPECT_EQ(side["config"]["axis"], "x");
  EXPECT_EQ(side["seed"], 4);
  EXPECT_EQ(io::read_stack(path("s.nii")).stack.geometry.axis, Axis::X);
}

TEST_F(Cli, ErrorsAreJsonOnStderr) {
  Outcome o = run({"simulate", "--in", path("missing.nii"), "--out-stack", path("s.nii"),
                   "--out-motion", path("m.svrm")});
  EXPECT_NE(o.code, 0);
  json e = json::parse(o.err);
  EXPECT_EQ(e["error"]["code"], "io_error");
  o = run({"simulate", "--levels", "3"});
  EXPECT_NE(o.code, 0);
  EXPECT_EQ(json::parse(o.err)["error"]["code"], "invalid_argument");
  o = run({"simulate", "--in", phantom(Dims(16, 16, 16)), "--psf", "zero", "--out-stack",
           path("s.nii"), "--out-motion", path("m.svrm")});
  EXPECT_EQ(json::parse(o.err)["error"]["code"], "invalid_config");
  o = run({"bogus"});
  EXPECT_NE(o.code, 0);
}

TEST_F(Cli, ReconstructZeroMotionStacks) {
  const std::string in = phantom(Dims(32, 32, 32));
  std::vector<std::string> args{"reconstruct", "--levels", "2", "--outer-iters", "2",
                                "--out-report", path("r.json"), "--out-volume", path("v.nii")};
  for (const char* axis : {"x", "y", "z"}) {
    const std::string s = path(std::string("s") + axis + ".nii"), m = path(std::string("m") + axis + ".svrm");
    ASSERT_EQ(run({"simulate", "--in", in, "--axis", axis, "--euler-max", "0", "--trans-max", "0",
                   "--noise", "0", "--gamma-lo", "1", "--gamma-hi", "1", "--out-stack", s,
                   "--out-motion", m})
                  .code,
              0);
    args.insert(args.end(), {"--stack", s, "--truth-motion", m});
  }
  const Outcome o = run(args);
  ASSERT_EQ(o.code, 0) << o.err;
  const auto raw = bytes(path("r.json"));
  const json rep = json::parse(std::string(raw.begin(), raw.end()));
  EXPECT_LT(rep["epe_compensated"].get<double>(), 0.01);
  EXPECT_EQ(rep["mode"], "multi-stack");
  EXPECT_EQ(rep["levels"].size(), 2u);
  EXPECT_TRUE(rep.contains("timings_ms"));
  EXPECT_TRUE(fs::exists(path("v.nii")));
}

TEST_F(Cli, ReconstructSingleStack) {
  const std::string in = phantom(Dims(16, 16, 16));
  ASSERT_EQ(run({"simulate", "--in", in, "--euler-max", "2", "--trans-max", "1", "--out-stack",
                 path("s.nii"), "--out-motion", path("m.svrm")})
                .code,
            0);
  const Outcome o = run({"reconstruct", "--stack", path("s.nii"), "--levels", "2", "--outer-iters", "1",
                         "--out-report", path("r.json"), "--out-holes", path("h.nii")});
  ASSERT_EQ(o.code, 0) << o.err;
  const auto raw = bytes(path("r.json"));
  const json rep = json::parse(std::string(raw.begin(), raw.end()));
  EXPECT_EQ(rep["mode"], "single-stack");
  EXPECT_EQ(rep["holes"]["total"], 16 * 16 * 16);
  EXPECT_TRUE(rep["holes"].contains("count"));
  EXPECT_TRUE(fs::exists(path("h.nii")));
}

TEST_F(Cli, PhantomPipelineRecoversMotion) {
  const std::string in = phantom(Dims(64, 64, 64));
  std::vector<std::string> args{"reconstruct", "--out-report", path("r.json")};
  const char* axes[3] = {"x", "y", "z"};
  for (int a = 0; a < 3; ++a) {
    const std::string s = path(std::string("s") + axes[a] + ".nii"),
                      m = path(std::string("m") + axes[a] + ".svrm");
    ASSERT_EQ(run({"simulate", "--in", in, "--axis", axes[a], "--seed", std::to_string(a),
                   "--euler-max", "5", "--trans-max", "2", "--gamma-lo", "1", "--gamma-hi", "1",
                   "--out-stack", s, "--out-motion", m})
                  .code,
              0);
    args.insert(args.end(), {"--stack", s, "--truth-motion", m});
  }
  const Outcome o = run(args);
  ASSERT_EQ(o.code, 0) << o.err;
  const auto raw = bytes(path("r.json"));
  const json rep = json::parse(std::string(raw.begin(), raw.end()));
  EXPECT_LT(rep["epe_compensated"].get<double>(), 0.5);
}

TEST_F(Cli, EvaluateIdentityAndOffset) {
  const StackGeometry g = StackGeometry::for_grid(Dims(8, 8, 8), Axis::Z, 4.0, 4);
  MotionStack u(g);
  for (Eigen::Index n = 0; n < u.data.size(); ++n) u.data[n] = 0.01 * double(n % 17);
  io::write_motion(path("u.svrm"), u);
  io::write_nifti(path("v.nii"), blob_phantom(Dims(8, 8, 8), 4));
  Outcome o = run({"evaluate", "--pred-motion", path("u.svrm"), "--truth-motion", path("u.svrm"),
                   "--pred-volume", path("v.nii"), "--truth-volume", path("v.nii")});
  ASSERT_EQ(o.code, 0) << o.err;
  json rep = json::parse(o.out);
  EXPECT_EQ(rep.size(), 6u);
  for (const char* k : {"mse", "epe", "epe_compensated", "ape"}) EXPECT_NEAR(rep[k].get<double>(), 0.0, 1e-9) << k;
  EXPECT_EQ(rep["psnr_slices"], 300.0);
  EXPECT_EQ(rep["psnr_volume"], 300.0);

  MotionStack shifted = u;
  for (int k = 0; k < g.K; ++k) shifted.slice(k).rowwise() += Eigen::RowVector3d(3, 4, 0);
  io::write_motion(path("w.svrm"), shifted);
  o = run({"evaluate", "--pred-motion", path("w.svrm"), "--truth-motion", path("u.svrm")});
  ASSERT_EQ(o.code, 0) << o.err;
  rep = json::parse(o.out);
  EXPECT_NEAR(rep["epe"].get<double>(), 5.0, 1e-5);
  EXPECT_TRUE(rep["psnr_volume"].is_null());
  o = run({"evaluate", "--pred-motion", path("w.svrm"), "--truth-motion", path("u.svrm"), "--spacing", "2"});
  EXPECT_NEAR(json::parse(o.out)["epe"].get<double>(), 10.0, 1e-5);
}

TEST_F(Cli, InpaintHoleFreeVolumeIsUnchanged) {
  const std::string in = phantom(Dims(10, 9, 8));
  io::write_nifti(path("mask.nii"), Volume(Dims(10, 9, 8)), "", io::NiftiType::UInt8);
  const Outcome o = run({"inpaint", "--in", in, "--mask", path("mask.nii"), "--out", path("o.nii")});
  ASSERT_EQ(o.code, 0) << o.err;
  const auto a = bytes(in), b = bytes(path("o.nii"));
  ASSERT_EQ(a.size(), b.size());
  EXPECT_TRUE(std::equal(a.begin() + 352, a.end(), b.begin() + 352));
}

TEST_F(Cli, SplatAndFormats) {
  const std::string in = phantom(Dims(16, 16, 16));
  ASSERT_EQ(run({"simulate", "--in", in, "--out-stack", path("s.nii"), "--out-motion", path("m.svrm")}).code, 0);
  const Outcome o = run({"splat", "--stack", path("s.nii"), "--motion", path("m.svrm"), "--out-volume",
                         path("v.nii"), "--out-weights", path("w.nii")});
  ASSERT_EQ(o.code, 0) << o.err;
  EXPECT_TRUE((io::read_nifti(path("v.nii")).volume.dims == 16).all());
  const Outcome f = run({"formats"});
  EXPECT_NE(f.out.find("SVRM"), std::string::npos);
  EXPECT_NE(run({"--help"}).out.find("reconstruct"), std::string::npos);
}

}  // namespace
}  // namespace svr
