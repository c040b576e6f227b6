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

#include <optional>
#include <vector>

#include "svrkit/rigid.hpp"

namespace svr {

inline constexpr double kPsnrCapDb = 300.0;

// Motion metrics are in reconstruction voxels, PSNR in dB. Fields left empty
// could not be computed from the inputs supplied.
struct MetricReport {
  std::optional<double> mse;
  std::optional<double> epe;
  std::optional<double> epe_compensated;
  std::optional<double> ape;
  std::optional<double> psnr_slices;
  std::optional<double> psnr_volume;
};

// Displacement rows u, v (N x 3); mask selects rows, empty = all.
double motion_mse(const PointCloud& u, const PointCloud& v, const Mask& mask = Mask());
double motion_mse(const MotionStack& u, const MotionStack& v, const Mask& mask = Mask());

// Mean end-point distance. With compensation, v's cloud v + p is first moved by the
// rigid transform from compensated_loss.
double epe(const PointCloud& u, const PointCloud& v, const PointCloud& p, const Mask& mask,
           bool compensate);
double epe(const MotionStack& u, const MotionStack& v, const Mask& mask = Mask(),
           bool compensate = false);

// EPE over several stacks pooled into one cloud, compensated by a single rigid
// transform. `masks` is empty (all pixels) or holds one pixel mask per stack.
double pooled_epe(const std::vector<MotionStack>& u, const std::vector<MotionStack>& v,
                  bool compensate, const std::vector<Mask>& masks = {});

inline constexpr double kForegroundRel = 0.1;

// Pixels whose magnitude reaches `rel` times the stack's largest magnitude.
Mask foreground_mask(const SliceStack& f, double rel = kForegroundRel);

// Anchor pixels (column, row): centre ((W-1)/2, (H-1)/2), bottom-left (0, 0),
// bottom-right (W-1, 0).
std::vector<Eigen::Vector2d> anchor_pixels(const StackGeometry& g);

// Mean over slices of the mean anchor-position distance; fields are sampled
// bilinearly at the anchors.
double ape(const MotionStack& u, const MotionStack& v);

// 10 log10(peak^2 / MSE) over masked elements, capped at 300 dB.
double psnr(const Eigen::VectorXd& a, const Eigen::VectorXd& b, const Mask& mask, double peak);
double psnr(const Volume& a, const Volume& b, const Mask& mask = Mask(), double peak = 0.0);
double psnr(const SliceStack& a, const SliceStack& b, const Mask& mask = Mask(),
            double peak = 0.0);

}  // namespace svr
