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

#include "oracle.hpp"
#include "svrkit/grid.hpp"

namespace svr {
namespace {

TEST(Gradient, ConstantVolumeIsFlat) {
  const Volume v(Dims(5, 4, 3), 1.0, 7.0);
  const Gradient<double> g = gradient(v);
  for (int a = 0; a < 3; ++a) EXPECT_EQ(g[a].data.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Gradient, RampAlongX) {
  Volume v(Dims(6, 5, 4));
  for (int k = 0; k < 4; ++k)
    for (int j = 0; j < 5; ++j)
      for (int i = 0; i < 6; ++i) v(i, j, k) = 2.0 * i;
  const Gradient<double> g = gradient(v);
  for (int k = 0; k < 4; ++k)
    for (int j = 0; j < 5; ++j)
      for (int i = 1; i < 5; ++i) EXPECT_EQ(g.dx(i, j, k), 2.0);
  EXPECT_EQ(g.dy.data.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(g.dz.data.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Gradient, MatchesLoopOracle) {
  Rng rng(3);
  const Dims d(6, 6, 6);
  const Volume v = oracle::random_volume(d, rng);
  const Gradient<double> g = gradient(v);
  for (int k = 0; k < 6; ++k)
    for (int j = 0; j < 6; ++j)
      for (int i = 0; i < 6; ++i) {
        const int idx[3] = {i, j, k};
        for (int a = 0; a < 3; ++a) {
          int lo[3] = {i, j, k}, hi[3] = {i, j, k};
          double scale = 0.5;
          if (idx[a] == 0) {
            hi[a] += 1;
            scale = 1.0;
          } else if (idx[a] == 5) {
            lo[a] -= 1;
            scale = 1.0;
          } else {
            lo[a] -= 1;
            hi[a] += 1;
          }
          const double expect = scale * (v(hi[0], hi[1], hi[2]) - v(lo[0], lo[1], lo[2]));
          EXPECT_EQ(g[a](i, j, k), expect);
        }
      }
}

TEST(Gradient, SingletonAxisIsZero) {
  Rng rng(4);
  const Volume v = oracle::random_volume(Dims(4, 1, 3), rng);
  EXPECT_EQ(gradient(v).dy.data.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Downsample, ConstantStaysConstant) {
  const Volume v(Dims(8, 6, 4), 1.0, 2.5);
  const Volume h = downsample2(v);
  EXPECT_TRUE((h.dims == Dims(4, 3, 2)).all());
  EXPECT_DOUBLE_EQ(h.spacing, 2.0);
  for (double x : h.data) EXPECT_DOUBLE_EQ(x, 2.5);
}

TEST(Downsample, EightVoxelsAverage) {
  Volume v(Dims(2, 2, 2));
  for (int n = 0; n < 8; ++n) v.data[n] = n;
  const Volume h = downsample2(v);
  ASSERT_EQ(h.data.size(), 1);
  EXPECT_DOUBLE_EQ(h.data[0], 3.5);
}

TEST(Downsample, OddDimsMatchBlockMeanOracle) {
  Rng rng(5);
  const Volume v = oracle::random_volume(Dims(5, 5, 5), rng);
  const Volume h = downsample2(v);
  ASSERT_TRUE((h.dims == Dims(3, 3, 3)).all());
  for (int K = 0; K < 3; ++K)
    for (int J = 0; J < 3; ++J)
      for (int I = 0; I < 3; ++I) {
        double sum = 0.0;
        int count = 0;
        for (int k = 2 * K; k < std::min(2 * K + 2, 5); ++k)
          for (int j = 2 * J; j < std::min(2 * J + 2, 5); ++j)
            for (int i = 2 * I; i < std::min(2 * I + 2, 5); ++i) {
              sum += v(i, j, k);
              ++count;
            }
        EXPECT_NEAR(h(I, J, K), sum / count, 1e-15);
      }
}

TEST(Upsample, ConstantStaysConstant) {
  const Volume c(Dims(3, 4, 2), 2.0, 1.25);
  const Volume f = upsample2(c, Dims(5, 8, 4));
  EXPECT_DOUBLE_EQ(f.spacing, 1.0);
  for (double x : f.data) EXPECT_NEAR(x, 1.25, 1e-15);
}

TEST(Upsample, RejectsDimsThatDoNotHalve) {
  const Volume c(Dims(3, 3, 3));
  EXPECT_THROW(upsample2(c, Dims(8, 6, 6)), Error);
}

TEST(Pyramid, FactorTwoChain) {
  const Volume v(Dims(64, 64, 64));
  const auto p = build_pyramid(v, 3);
  ASSERT_EQ(p.levels.size(), 3u);
  EXPECT_EQ(p.factor, 2);
  EXPECT_TRUE((p.levels[0].dims == 64).all());
  EXPECT_TRUE((p.levels[1].dims == 32).all());
  EXPECT_TRUE((p.levels[2].dims == 16).all());
}

TEST(Pyramid, SingleLevelIsInput) {
  Rng rng(6);
  const Volume v = oracle::random_volume(Dims(5, 6, 7), rng);
  const auto p = build_pyramid(v, 1);
  ASSERT_EQ(p.levels.size(), 1u);
  EXPECT_EQ(p.levels[0].data, v.data);
}

TEST(Pyramid, TooDeepIsRejected) {
  const Volume v(Dims(48, 48, 48));
  EXPECT_THROW(build_pyramid(v, 5), Error);
  EXPECT_NO_THROW(build_pyramid(v, 4));
  EXPECT_THROW(build_pyramid(v, 0), Error);
}

TEST(Pyramid, CeilDivisionPerLevel) {
  const auto dims = pyramid_dims(Dims(19, 9, 8), 2);
  EXPECT_TRUE((dims[1] == Dims(10, 5, 4)).all());
}

TEST(Lattice, PointEqualsIndexTriple) {
  const Dims d(3, 4, 5);
  const Eigen::MatrixX3d p = coord_lattice(d);
  const Volume v(d);
  for (int k = 0; k < 5; ++k)
    for (int j = 0; j < 4; ++j)
      for (int i = 0; i < 3; ++i)
        EXPECT_EQ(p.row(v.index(i, j, k)), Eigen::RowVector3d(i, j, k));
}

TEST(Volume, RejectsBadDims) {
  EXPECT_THROW(Volume(Dims(0, 2, 2)), Error);
  Volume v(Dims(2, 2, 2));
  v.data[3] = std::numeric_limits<double>::quiet_NaN();
  EXPECT_FALSE(v.valid());
  EXPECT_THROW(gradient(v), Error);
}

}  // namespace
}  // namespace svr
