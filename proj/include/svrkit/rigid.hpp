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

#pragma once

#include <Eigen/Core>

#include "svrkit/warp.hpp"

namespace svr {

// Point clouds are N x 3 with one point per row, and transforms act on row
// vectors: x -> x R + t.
using PointCloud = Eigen::MatrixX3d;

struct RigidTransform {
  Eigen::Matrix3d R = Eigen::Matrix3d::Identity();
  Eigen::RowVector3d t = Eigen::RowVector3d::Zero();

  bool is_rotation(double tol = 1e-9) const;
  PointCloud apply(const PointCloud& pts) const { return (pts * R).rowwise() + t; }
};

struct PolarFactors {
  Eigen::Matrix3d rotation;
  Eigen::Matrix3d stretch;
  Eigen::Vector3d singular_values;
  bool ill_conditioned = false;  // smallest singular value negligible
};

struct AffineFit {
  Eigen::Matrix3d A;
  Eigen::RowVector3d b;
};

struct CompensatedLoss {
  double loss = 0.0;
  RigidTransform rigid;  // maps v's cloud onto u's
};

// Rows of the cloud u + p for a motion stack, in (slice, row, column) order.
PointCloud motion_points(const MotionStack& u);
// Displacement rows (no p), same order.
PointCloud motion_rows(const MotionStack& u);

// Least-squares u ~ v A + b over the masked rows (empty mask = all rows).
// Throws DegenerateFit when the masked v rows are coplanar or too few.
AffineFit fit_affine(const PointCloud& u, const PointCloud& v, const Mask& mask = Mask());
AffineFit fit_affine(const MotionStack& u, const MotionStack& v, const Mask& mask = Mask());

// Rp = U S V^T; rotation = U D V^T, stretch = V D S V^T, D = diag(1, 1, det(U V^T)).
PolarFactors polar_decompose(const Eigen::Matrix3d& Rp);

// Mean over masked rows of |u - (v R + t)|^2 minimised over rotations via an
// affine fit projected onto the rotations; t is re-solved for the projected R.
CompensatedLoss compensated_loss(const PointCloud& u, const PointCloud& v,
                                 const Mask& mask = Mask());
CompensatedLoss compensated_loss(const MotionStack& u, const MotionStack& v,
                                 const Mask& mask = Mask());

// Field whose cloud is (field + p) R + t.
MotionStack apply_rigid(const MotionStack& field, const RigidTransform& rigid);

}  // namespace svr
