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

#include <cstdint>
#include <vector>

#include "svrkit/random.hpp"
#include "svrkit/warp.hpp"

namespace svr {

// Euler angles in degrees about x, y, z and a translation in voxels.
// Rotation is intrinsic Z-Y-X: R = Rz(euler.z) * Ry(euler.y) * Rx(euler.x).
struct RigidParams {
  Eigen::Vector3d euler_deg = Eigen::Vector3d::Zero();
  Eigen::Vector3d trans = Eigen::Vector3d::Zero();

  Eigen::Matrix3d rotation() const;
};

Eigen::Matrix3d euler_zyx(const Eigen::Vector3d& euler_deg);

struct SliceTrajectory {
  std::vector<RigidParams> params;  // one per slice, in slice-index order
  Eigen::Vector3d center = Eigen::Vector3d::Zero();  // rotation centre, voxel coordinates
};

struct SimConfig {
  int knots_min = 32;
  int knots_max = 64;
  double euler_max = 20.0;  // degrees
  double trans_max = 26.0;  // voxels
  int psf_width = 4;
  int stride = 4;
  double noise_sigma = 0.01;
  double gamma_lo = 0.9;
  double gamma_hi = 1.0;
  bool interleave = true;
  Axis axis = Axis::Z;
  std::uint64_t seed = 0;

  void validate() const;
};

// Evaluates a clamped uniform B-spline (cubic, or lower degree when there are fewer
// than four control points) at `samples` equally spaced parameters in [0, 1].
// Rows of `control` are control points.
Eigen::MatrixXd clamped_bspline(const Eigen::MatrixXd& control, int samples);

// Slice index -> temporal index under two-shot interleaving: the first ceil(K/2)
// time points go to slices 0, 2, 4, ... and the rest to slices 1, 3, 5, ...
std::vector<int> interleave_order(int K);

Eigen::Vector3d grid_center(const Dims& dims);

// Smooth random rigid trajectory of length K about `center`.
SliceTrajectory gen_trajectory(int K, const SimConfig& cfg, Rng& rng,
                               const Eigen::Vector3d& center = Eigen::Vector3d::Zero());

// Exact rigid displacement R (q - c) + c + t - q at every slice pixel centre q.
MotionStack rasterize_motion(const SliceTrajectory& traj, const StackGeometry& geometry);

struct Acquisition {
  SliceStack stack;
  MotionStack motion;
  SliceTrajectory trajectory;
  double gamma = 1.0;
};

// Slices `vol` along cfg.axis every cfg.stride voxels through a boxcar PSF of
// cfg.psf_width, then adds Gaussian noise and applies x -> m (x / m)^gamma with
// m the stack's largest magnitude (sign preserved).
Acquisition acquire(const Volume& vol, const SliceTrajectory& traj, const SimConfig& cfg,
                    Rng& rng);

// gen_trajectory + acquire with a fresh stream seeded from cfg.seed and the
// rotation centre at the grid centre.
Acquisition simulate(const Volume& vol, const SimConfig& cfg);

}  // namespace svr
