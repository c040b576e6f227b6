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

#include "svrkit/warp.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace svr {

Axis parse_axis(const std::string& s) {
  if (s == "x" || s == "0") return Axis::X;
  if (s == "y" || s == "1") return Axis::Y;
  if (s == "z" || s == "2") return Axis::Z;
  throw Error(ErrorCode::InvalidArgument, "unknown axis '" + s + "' (expected x, y or z)");
}

std::string StackGeometry::describe() const {
  std::ostringstream os;
  os << "[K=" << K << " H=" << H << " W=" << W << " spacing=" << spacing
     << " axis=" << axis_name(axis) << " slab=" << slab << "]";
  return os.str();
}

StackGeometry StackGeometry::for_grid(const Dims& dims, Axis axis, double spacing, int slab) {
  require((dims >= 1).all(), ErrorCode::InvalidArgument, "grid dims must be >= 1");
  require(spacing > 0 && slab >= 1, ErrorCode::InvalidArgument,
          "slice spacing must be > 0 and slab >= 1");
  StackGeometry g;
  g.axis = axis;
  g.spacing = spacing;
  g.slab = slab;
  g.W = dims[g.col_axis()];
  g.H = dims[g.row_axis()];
  g.K = int(std::floor(dims[g.through_axis()] / spacing + 1e-9));
  require(g.K >= 1, ErrorCode::GeometryMismatch,
          "slice spacing " + std::to_string(spacing) + " leaves no slices in grid " +
              dims_string(dims));
  return g;
}

Dims grid_dims_for(const StackGeometry& g) {
  Dims d;
  d[g.col_axis()] = g.W;
  d[g.row_axis()] = g.H;
  d[g.through_axis()] = int(std::lround(g.K * g.spacing));
  return d;
}

StackGeometry coarsen(const StackGeometry& g) {
  StackGeometry c = g;
  c.H = (g.H + 1) / 2;
  c.W = (g.W + 1) / 2;
  c.spacing = g.spacing / 2.0;
  c.slab = std::max(1, (g.slab + 1) / 2);
  return c;
}

SliceStack downsample2(const SliceStack& stack) {
  const StackGeometry& g = stack.geometry;
  SliceStack out(coarsen(g));
  Eigen::VectorXd count = Eigen::VectorXd::Zero(out.data.size());
  for (int k = 0; k < g.K; ++k)
    for (int r = 0; r < g.H; ++r)
      for (int c = 0; c < g.W; ++c) {
        const auto n = out.index(k, r / 2, c / 2);
        out.data[n] += stack(k, r, c);
        count[n] += 1.0;
      }
  out.data.array() /= count.array();
  return out;
}

MotionStack downsample2(const MotionStack& motion) {
  const StackGeometry& g = motion.geometry;
  MotionStack out(coarsen(g));
  const StackGeometry& cg = out.geometry;
  for (int k = 0; k < g.K; ++k) {
    auto src = motion.slice(k);
    auto dst = out.slice(k);
    Eigen::VectorXd count = Eigen::VectorXd::Zero(cg.pixels_per_slice());
    for (int r = 0; r < g.H; ++r)
      for (int c = 0; c < g.W; ++c) {
        const Eigen::Index n = Eigen::Index(r / 2) * cg.W + c / 2;
        dst.row(n) += src.row(Eigen::Index(r) * g.W + c);
        count[n] += 1.0;
      }
    for (int comp = 0; comp < 3; ++comp)
      dst.col(comp).array() /= 2.0 * count.array();
  }
  return out;
}

namespace {

// Linear interpolation weights with linear extrapolation past the ends.
void lerp_coords(double x, int n, int& i0, double& t) {
  if (n == 1) {
    i0 = 0;
    t = 0.0;
    return;
  }
  i0 = std::clamp(int(std::floor(x)), 0, n - 2);
  t = x - i0;
}

}  // namespace

MotionStack upsample2(const MotionStack& coarse, const StackGeometry& fine) {
  require(coarsen(fine) == coarse.geometry, ErrorCode::GeometryMismatch,
          "upsample2: " + coarse.geometry.describe() + " is not the coarsening of " +
              fine.describe());
  const StackGeometry& cg = coarse.geometry;
  MotionStack out(fine);
  for (int k = 0; k < fine.K; ++k) {
    auto src = coarse.slice(k);
    auto dst = out.slice(k);
    for (int r = 0; r < fine.H; ++r) {
      int r0;
      double tr;
      lerp_coords((r - 0.5) / 2.0, cg.H, r0, tr);
      const int r1 = std::min(r0 + 1, cg.H - 1);
      for (int c = 0; c < fine.W; ++c) {
        int c0;
        double tc;
        lerp_coords((c - 0.5) / 2.0, cg.W, c0, tc);
        const int c1 = std::min(c0 + 1, cg.W - 1);
        auto px = [&](int rr, int cc) { return src.row(Eigen::Index(rr) * cg.W + cc); };
        const Eigen::RowVector3d top = (1 - tc) * px(r0, c0) + tc * px(r0, c1);
        const Eigen::RowVector3d bot = (1 - tc) * px(r1, c0) + tc * px(r1, c1);
        dst.row(Eigen::Index(r) * fine.W + c) = 2.0 * ((1 - tr) * top + tr * bot);
      }
    }
  }
  return out;
}

Eigen::MatrixX3d slice_coordinates(const StackGeometry& g) {
  Eigen::MatrixX3d p(g.pixel_count(), 3);
  Eigen::Index n = 0;
  for (int k = 0; k < g.K; ++k)
    for (int r = 0; r < g.H; ++r)
      for (int c = 0; c < g.W; ++c, ++n) p.row(n) = g.nominal(k, r, c).transpose();
  return p;
}

}  // namespace svr
