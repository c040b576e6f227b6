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

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include <numbers>

#include "oracle.hpp"
#include "svrkit/rigid.hpp"

namespace svr {
namespace {

Eigen::Matrix3d random_rotation(Rng& rng) {
  Eigen::Quaterniond q(rng.normal(), rng.normal(), rng.normal(), rng.normal());
  return q.normalized().toRotationMatrix();
}

PointCloud random_cloud(Eigen::Index n, Rng& rng, double scale) {
  PointCloud p(n, 3);
  for (Eigen::Index i = 0; i < p.size(); ++i) p.data()[i] = rng.uniform(-scale, scale);
  return p;
}

StackGeometry cube_geometry() { return StackGeometry::for_grid(Dims(8, 8, 8), Axis::Z, 1.0, 1); }

TEST(FitAffine, IdenticalCloudsGiveIdentity) {
  Rng rng(1);
  const PointCloud v = random_cloud(50, rng, 5);
  const AffineFit f = fit_affine(v, v);
  EXPECT_LT((f.A - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT(f.b.cwiseAbs().maxCoeff(), 1e-12);
}

TEST(FitAffine, RecoversExactAffineMap) {
  Rng rng(2);
  const StackGeometry g = cube_geometry();
  const MotionStack v = oracle::random_motion(g, rng, 1.0);
  Eigen::Matrix3d A0 = Eigen::Matrix3d::Identity() + 0.3 * Eigen::Matrix3d::Random();
  ASSERT_GT(std::abs(A0.determinant()), 0.1);
  const Eigen::RowVector3d b0(0.4, -1.2, 2.0);
  const PointCloud P = slice_coordinates(g);
  const PointCloud target = (motion_points(v) * A0).rowwise() + b0;
  MotionStack u(g);
  const PointCloud disp = target - P;
  for (int k = 0; k < g.K; ++k) u.slice(k) = disp.middleRows(k * g.pixels_per_slice(), g.pixels_per_slice());
  const AffineFit f = fit_affine(u, v);
  EXPECT_LT((f.A - A0).cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_LT((f.b - b0).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(FitAffine, CoplanarCloudIsDegenerate) {
  Rng rng(3);
  PointCloud v = random_cloud(40, rng, 3);
  v.col(2).setConstant(1.5);
  EXPECT_THROW(
      {
        try {
          fit_affine(random_cloud(40, rng, 3), v);
        } catch (const Error& e) {
          EXPECT_EQ(e.code(), ErrorCode::DegenerateFit);
          throw;
        }
      },
      Error);
  Mask few = Mask::Constant(40, false);
  few.head(3).setConstant(true);
  EXPECT_THROW(fit_affine(v, v, few), Error);
}

TEST(Polar, IdentityAndScaledIdentity) {
  PolarFactors p = polar_decompose(Eigen::Matrix3d::Identity());
  EXPECT_LT((p.rotation - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_LT((p.stretch - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff(), 1e-14);
  p = polar_decompose(2.0 * Eigen::Matrix3d::Identity());
  EXPECT_LT((p.rotation - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_LT((p.stretch - 2.0 * Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Polar, RecoversConstructedFactors) {
  const Eigen::Matrix3d Q =
      Eigen::AngleAxisd(std::numbers::pi / 6, Eigen::Vector3d::UnitZ()).toRotationMatrix();
  const Eigen::Matrix3d P = Eigen::Vector3d(2, 3, 4).asDiagonal();
  const PolarFactors f = polar_decompose(Q * P);
  EXPECT_LT((f.rotation - Q).cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_LT((f.stretch - P).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Polar, RandomMatricesFactorCleanly) {
  Rng rng(4);
  for (int trial = 0; trial < 200; ++trial) {
    Eigen::Matrix3d M;
    for (int i = 0; i < 9; ++i) M.data()[i] = rng.uniform(-1, 1);
    if (M.determinant() <= 0) M.col(0) *= -1;
    const PolarFactors f = polar_decompose(M);
    const RigidTransform r{f.rotation, Eigen::RowVector3d::Zero()};
    EXPECT_TRUE(r.is_rotation(1e-9));
    EXPECT_LT((f.rotation * f.stretch - M).cwiseAbs().maxCoeff(), 1e-8);
    EXPECT_LT((f.stretch - f.stretch.transpose()).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(Polar, ReflectionIsCorrected) {
  const Eigen::Matrix3d M = Eigen::Vector3d(1, 1, -1).asDiagonal();
  const PolarFactors f = polar_decompose(M);
  EXPECT_NEAR(f.rotation.determinant(), 1.0, 1e-12);
}

TEST(CompensatedLoss, EqualFieldsAreFree) {
  Rng rng(5);
  const MotionStack v = oracle::random_motion(cube_geometry(), rng, 1.0);
  const CompensatedLoss c = compensated_loss(v, v);
  EXPECT_LT(c.loss, 1e-20);
  EXPECT_TRUE(c.rigid.R.isIdentity(1e-10));
  EXPECT_LT(c.rigid.t.norm(), 1e-10);
}

TEST(CompensatedLoss, RigidOffsetIsFree) {
  Rng rng(6);
  const StackGeometry g = cube_geometry();
  const MotionStack v = oracle::random_motion(g, rng, 1.0);
  const RigidTransform off{random_rotation(rng), Eigen::RowVector3d(1.0, -2.0, 0.5)};
  const MotionStack u = apply_rigid(v, off);
  const CompensatedLoss c = compensated_loss(u, v);
  EXPECT_LT(c.loss, 1e-8);
  EXPECT_LT((c.rigid.R - off.R).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(CompensatedLoss, NeverWorseThanIdentity) {
  Rng rng(7);
  const StackGeometry g = cube_geometry();
  for (int trial = 0; trial < 50; ++trial) {
    const MotionStack u = oracle::random_motion(g, rng, 1.0);
    const MotionStack v = oracle::random_motion(g, rng, 1.0);
    const double mse = (motion_rows(u) - motion_rows(v)).squaredNorm() / double(g.pixel_count());
    EXPECT_LE(compensated_loss(u, v).loss, mse + 1e-9);
  }
}

TEST(CompensatedLoss, MaskRestrictsPoints) {
  Rng rng(8);
  const StackGeometry g = cube_geometry();
  const MotionStack v = oracle::random_motion(g, rng, 1.0);
  MotionStack u = v;
  Mask mask = Mask::Constant(g.pixel_count(), true);
  // Corrupt slice 0 only, then mask it out.
  u.slice(0).array() += 3.0;
  mask.head(g.pixels_per_slice()).setConstant(false);
  EXPECT_LT(compensated_loss(u, v, mask).loss, 1e-20);
  EXPECT_GT(compensated_loss(u, v).loss, 0.1);
}

TEST(ApplyRigid, IdentityAndTranslation) {
  Rng rng(9);
  const StackGeometry g = cube_geometry();
  const MotionStack f = oracle::random_motion(g, rng, 1.0);
  EXPECT_LT((apply_rigid(f, RigidTransform{}).data - f.data).cwiseAbs().maxCoeff(), 1e-12);
  const RigidTransform t{Eigen::Matrix3d::Identity(), Eigen::RowVector3d(1, 2, 3)};
  const MotionStack m = apply_rigid(MotionStack(g), t);
  for (int k = 0; k < g.K; ++k)
    for (Eigen::Index p = 0; p < g.pixels_per_slice(); ++p)
      EXPECT_LT((m.slice(k).row(p) - Eigen::RowVector3d(1, 2, 3)).norm(), 1e-12);
}

TEST(ApplyRigid, MatchesPerPointOracle) {
  Rng rng(10);
  const StackGeometry g = StackGeometry::for_grid(Dims(6, 5, 8), Axis::Y, 2.0, 2);
  const MotionStack f = oracle::random_motion(g, rng, 1.5);
  const RigidTransform rt{random_rotation(rng), Eigen::RowVector3d(0.3, -0.7, 1.1)};
  const MotionStack m = apply_rigid(f, rt);
  for (int k = 0; k < g.K; ++k)
    for (int r = 0; r < g.H; ++r)
      for (int c = 0; c < g.W; ++c) {
        const Eigen::RowVector3d p = g.nominal(k, r, c).transpose();
        const Eigen::RowVector3d x = f.at(k, r, c).transpose() + p;
        Eigen::RowVector3d y;
        for (int j = 0; j < 3; ++j) {
          y[j] = rt.t[j];
          for (int i = 0; i < 3; ++i) y[j] += x[i] * rt.R(i, j);
        }
        EXPECT_LT((m.at(k, r, c).transpose() - (y - p)).cwiseAbs().maxCoeff(), 1e-12);
      }
}

TEST(RigidTransform, RotationCheck) {
  RigidTransform r;
  EXPECT_TRUE(r.is_rotation());
  r.R(0, 0) = -1;
  EXPECT_FALSE(r.is_rotation());
  r.R = 1.001 * Eigen::Matrix3d::Identity();
  EXPECT_FALSE(r.is_rotation());
}

}  // namespace
}  // namespace svr
