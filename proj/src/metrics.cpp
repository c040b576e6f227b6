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

#include "svrkit/metrics.hpp"

#include <cmath>

namespace svr {

namespace {

Eigen::Index checked_count(Eigen::Index rows, const Mask& mask, const char* what) {
  require(mask.size() == 0 || mask.size() == rows, ErrorCode::GeometryMismatch,
          std::string(what) + ": mask length does not match");
  const Eigen::Index n = mask.size() == 0 ? rows : mask.count();
  require(n > 0, ErrorCode::InvalidArgument, std::string(what) + ": empty mask");
  return n;
}

bool selected(const Mask& mask, Eigen::Index i) { return mask.size() == 0 || mask[i]; }

void check_same(const MotionStack& u, const MotionStack& v, const char* what) {
  require(u.geometry == v.geometry, ErrorCode::GeometryMismatch,
          std::string(what) + ": " + u.geometry.describe() + " vs " + v.geometry.describe());
}

}  // namespace

double motion_mse(const PointCloud& u, const PointCloud& v, const Mask& mask) {
  require(u.rows() == v.rows(), ErrorCode::GeometryMismatch, "motion_mse: row counts differ");
  const Eigen::Index n = checked_count(u.rows(), mask, "motion_mse");
  double sum = 0.0;
  for (Eigen::Index i = 0; i < u.rows(); ++i)
    if (selected(mask, i)) sum += (u.row(i) - v.row(i)).squaredNorm();
  return sum / double(n);
}

double motion_mse(const MotionStack& u, const MotionStack& v, const Mask& mask) {
  check_same(u, v, "motion_mse");
  return motion_mse(motion_rows(u), motion_rows(v), mask);
}

double epe(const PointCloud& u, const PointCloud& v, const PointCloud& p, const Mask& mask,
           bool compensate) {
  require(u.rows() == v.rows() && u.rows() == p.rows(), ErrorCode::GeometryMismatch,
          "epe: row counts differ");
  const Eigen::Index n = checked_count(u.rows(), mask, "epe");
  PointCloud target = v;
  if (compensate) {
    const CompensatedLoss comp = compensated_loss(u + p, v + p, mask);
    target = comp.rigid.apply(v + p) - p;
  }
  double sum = 0.0;
  for (Eigen::Index i = 0; i < u.rows(); ++i)
    if (selected(mask, i)) sum += (u.row(i) - target.row(i)).norm();
  return sum / double(n);
}

double epe(const MotionStack& u, const MotionStack& v, const Mask& mask, bool compensate) {
  check_same(u, v, "epe");
  return epe(motion_rows(u), motion_rows(v), slice_coordinates(u.geometry), mask, compensate);
}

double pooled_epe(const std::vector<MotionStack>& u, const std::vector<MotionStack>& v,
                  bool compensate, const std::vector<Mask>& masks) {
  require(u.size() == v.size() && !u.empty(), ErrorCode::GeometryMismatch,
          "pooled_epe: stack counts differ or are zero");
  require(masks.empty() || masks.size() == u.size(), ErrorCode::GeometryMismatch,
          "pooled_epe: need one mask per stack");
  Eigen::Index rows = 0;
  for (std::size_t s = 0; s < u.size(); ++s) {
    check_same(u[s], v[s], "pooled_epe");
    rows += u[s].geometry.pixel_count();
  }
  PointCloud U(rows, 3), V(rows, 3), P(rows, 3);
  Mask M;
  if (!masks.empty()) M.resize(rows);
  Eigen::Index at = 0;
  for (std::size_t s = 0; s < u.size(); ++s) {
    const Eigen::Index n = u[s].geometry.pixel_count();
    if (!masks.empty()) {
      require(masks[s].size() == n, ErrorCode::GeometryMismatch,
              "pooled_epe: mask size differs from the stack's pixel count");
      M.segment(at, n) = masks[s];
    }
    U.middleRows(at, n) = motion_rows(u[s]);
    V.middleRows(at, n) = motion_rows(v[s]);
    P.middleRows(at, n) = slice_coordinates(u[s].geometry);
    at += n;
  }
  return epe(U, V, P, M, compensate);
}

Mask foreground_mask(const SliceStack& f, double rel) {
  require(f.valid(), ErrorCode::InvalidArgument, "foreground_mask: invalid stack");
  require(rel >= 0, ErrorCode::InvalidArgument, "foreground_mask: rel must be >= 0");
  const Eigen::ArrayXd mag = f.data.array().abs();
  return mag >= rel * mag.maxCoeff();
}

std::vector<Eigen::Vector2d> anchor_pixels(const StackGeometry& g) {
  return {Eigen::Vector2d((g.W - 1) / 2.0, (g.H - 1) / 2.0), Eigen::Vector2d(0.0, 0.0),
          Eigen::Vector2d(g.W - 1.0, 0.0)};
}

namespace {

Eigen::RowVector3d sample_bilinear(const MotionStack& m, int k, const Eigen::Vector2d& at) {
  const StackGeometry& g = m.geometry;
  const auto field = m.slice(k);
  const int c0 = std::min(int(std::floor(at.x())), g.W - 2);
  const int r0 = std::min(int(std::floor(at.y())), g.H - 2);
  const double tc = at.x() - c0, tr = at.y() - r0;
  auto px = [&](int r, int c) { return field.row(Eigen::Index(r) * g.W + c); };
  return (1 - tr) * ((1 - tc) * px(r0, c0) + tc * px(r0, c0 + 1)) +
         tr * ((1 - tc) * px(r0 + 1, c0) + tc * px(r0 + 1, c0 + 1));
}

}  // namespace

double ape(const MotionStack& u, const MotionStack& v) {
  check_same(u, v, "ape");
  const StackGeometry& g = u.geometry;
  require(g.H >= 2 && g.W >= 2, ErrorCode::InvalidArgument,
          "ape: slices smaller than 2x2 have coincident anchors");
  const auto anchors = anchor_pixels(g);
  double total = 0.0;
  for (int k = 0; k < g.K; ++k) {
    double slice_sum = 0.0;
    for (const auto& a : anchors)
      slice_sum += (sample_bilinear(u, k, a) - sample_bilinear(v, k, a)).norm();
    total += slice_sum / double(anchors.size());
  }
  return total / g.K;
}

double psnr(const Eigen::VectorXd& a, const Eigen::VectorXd& b, const Mask& mask, double peak) {
  require(a.size() == b.size(), ErrorCode::GeometryMismatch, "psnr: sizes differ");
  require(peak > 0, ErrorCode::InvalidArgument, "psnr: peak must be > 0");
  const Eigen::Index n = checked_count(a.size(), mask, "psnr");
  double sum = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i)
    if (selected(mask, i)) sum += (a[i] - b[i]) * (a[i] - b[i]);
  const double mse = sum / double(n);
  if (mse == 0.0) return kPsnrCapDb;
  return std::min(kPsnrCapDb, 10.0 * std::log10(peak * peak / mse));
}

double psnr(const Volume& a, const Volume& b, const Mask& mask, double peak) {
  require((a.dims == b.dims).all(), ErrorCode::GeometryMismatch, "psnr: volume dims differ");
  return psnr(a.data, b.data, mask, peak > 0 ? peak : b.data.maxCoeff());
}

double psnr(const SliceStack& a, const SliceStack& b, const Mask& mask, double peak) {
  require(a.geometry == b.geometry, ErrorCode::GeometryMismatch, "psnr: stack geometries differ");
  return psnr(a.data, b.data, mask, peak > 0 ? peak : b.data.maxCoeff());
}

}  // namespace svr
