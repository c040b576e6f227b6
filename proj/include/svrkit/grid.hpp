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

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "svrkit/error.hpp"

namespace svr {

using Dims = Eigen::Array3i;

inline Eigen::Index voxel_count(const Dims& dims) {
  return Eigen::Index(dims[0]) * dims[1] * dims[2];
}

inline std::string dims_string(const Dims& d) {
  return std::to_string(d[0]) + "x" + std::to_string(d[1]) + "x" + std::to_string(d[2]);
}

// Dense scalar lattice, x fastest: linear index = i + Nx * (j + Ny * k).
template <typename Scalar>
struct BasicVolume {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  Dims dims = Dims::Ones();
  double spacing = 1.0;  // isotropic voxel size in mm
  Vector data;

  BasicVolume() : data(Vector::Zero(1)) {}
  explicit BasicVolume(const Dims& d, double mm = 1.0, Scalar fill = Scalar(0))
      : dims(d), spacing(mm) {
    require((d >= 1).all(), ErrorCode::InvalidArgument,
            "volume dims must be >= 1, got " + dims_string(d));
    data = Vector::Constant(voxel_count(d), fill);
  }

  Eigen::Index index(int i, int j, int k) const {
    return i + Eigen::Index(dims[0]) * (j + Eigen::Index(dims[1]) * k);
  }
  Scalar& operator()(int i, int j, int k) { return data[index(i, j, k)]; }
  Scalar operator()(int i, int j, int k) const { return data[index(i, j, k)]; }

  bool contains(int i, int j, int k) const {
    return i >= 0 && j >= 0 && k >= 0 && i < dims[0] && j < dims[1] && k < dims[2];
  }

  bool valid() const {
    return (dims >= 1).all() && data.size() == voxel_count(dims) && data.allFinite();
  }

  template <typename Other>
  BasicVolume<Other> cast() const {
    BasicVolume<Other> out;
    out.dims = dims;
    out.spacing = spacing;
    out.data = data.template cast<Other>();
    return out;
  }
};

using Volume = BasicVolume<double>;
using VolumeF = BasicVolume<float>;

template <typename Scalar>
void require_valid(const BasicVolume<Scalar>& vol, const char* what) {
  require(vol.valid(), ErrorCode::InvalidArgument,
          std::string(what) + ": volume has inconsistent size or non-finite values");
}

// Voxel coordinates in voxel units, one row per voxel in linear order.
template <typename Scalar = double>
Eigen::Matrix<Scalar, Eigen::Dynamic, 3> coord_lattice(const Dims& dims) {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 3> pts(voxel_count(dims), 3);
  Eigen::Index n = 0;
  for (int k = 0; k < dims[2]; ++k)
    for (int j = 0; j < dims[1]; ++j)
      for (int i = 0; i < dims[0]; ++i, ++n) pts.row(n) << Scalar(i), Scalar(j), Scalar(k);
  return pts;
}

template <typename Scalar>
struct Gradient {
  BasicVolume<Scalar> dx, dy, dz;

  const BasicVolume<Scalar>& operator[](int axis) const {
    return axis == 0 ? dx : (axis == 1 ? dy : dz);
  }
};

// Central differences inside, one-sided differences on the boundary.
// A dimension of extent 1 has zero derivative.
template <typename Scalar>
Gradient<Scalar> gradient(const BasicVolume<Scalar>& vol) {
  require_valid(vol, "gradient");
  Gradient<Scalar> g{BasicVolume<Scalar>(vol.dims, vol.spacing),
                     BasicVolume<Scalar>(vol.dims, vol.spacing),
                     BasicVolume<Scalar>(vol.dims, vol.spacing)};
  BasicVolume<Scalar>* outs[3] = {&g.dx, &g.dy, &g.dz};
  const Dims& d = vol.dims;
  for (int axis = 0; axis < 3; ++axis) {
    const int n = d[axis];
    if (n == 1) continue;
    BasicVolume<Scalar>& out = *outs[axis];
    for (int k = 0; k < d[2]; ++k)
      for (int j = 0; j < d[1]; ++j)
        for (int i = 0; i < d[0]; ++i) {
          std::array<int, 3> lo{i, j, k}, hi{i, j, k};
          const int c = lo[axis];
          Scalar scale = Scalar(0.5);
          if (c == 0) {
            hi[axis] = 1;
            scale = Scalar(1);
          } else if (c == n - 1) {
            lo[axis] = n - 2;
            scale = Scalar(1);
          } else {
            lo[axis] = c - 1;
            hi[axis] = c + 1;
          }
          out(i, j, k) = scale * (vol(hi[0], hi[1], hi[2]) - vol(lo[0], lo[1], lo[2]));
        }
  }
  return g;
}

inline Dims half_dims(const Dims& d) { return (d + 1) / 2; }

// Mean over each 2x2x2 block; partial blocks on odd edges average the voxels present.
template <typename Scalar>
BasicVolume<Scalar> downsample2(const BasicVolume<Scalar>& vol) {
  require_valid(vol, "downsample2");
  BasicVolume<Scalar> out(half_dims(vol.dims), vol.spacing * 2.0);
  BasicVolume<Scalar> count(out.dims, out.spacing);
  for (int k = 0; k < vol.dims[2]; ++k)
    for (int j = 0; j < vol.dims[1]; ++j)
      for (int i = 0; i < vol.dims[0]; ++i) {
        out(i / 2, j / 2, k / 2) += vol(i, j, k);
        count(i / 2, j / 2, k / 2) += Scalar(1);
      }
  out.data.array() /= count.data.array();
  return out;
}

// Trilinear upsampling onto a lattice twice as fine. Fine voxel f sits at
// coarse coordinate (f - 0.5) / 2; coordinates are clamped to the coarse grid.
template <typename Scalar>
BasicVolume<Scalar> upsample2(const BasicVolume<Scalar>& coarse, const Dims& fine_dims) {
  require((half_dims(fine_dims) == coarse.dims).all(), ErrorCode::GeometryMismatch,
          "upsample2: " + dims_string(fine_dims) + " does not halve to " +
              dims_string(coarse.dims));
  BasicVolume<Scalar> out(fine_dims, coarse.spacing / 2.0);
  auto axis_weights = [&](int f, int axis, int& i0, int& i1, Scalar& t) {
    const double x = std::clamp((f - 0.5) / 2.0, 0.0, double(coarse.dims[axis] - 1));
    i0 = int(std::floor(x));
    i1 = std::min(i0 + 1, coarse.dims[axis] - 1);
    t = Scalar(x - i0);
  };
  for (int k = 0; k < fine_dims[2]; ++k) {
    int k0, k1;
    Scalar tz;
    axis_weights(k, 2, k0, k1, tz);
    for (int j = 0; j < fine_dims[1]; ++j) {
      int j0, j1;
      Scalar ty;
      axis_weights(j, 1, j0, j1, ty);
      for (int i = 0; i < fine_dims[0]; ++i) {
        int i0, i1;
        Scalar tx;
        axis_weights(i, 0, i0, i1, tx);
        auto lerp = [](Scalar a, Scalar b, Scalar t) { return a + t * (b - a); };
        const Scalar c00 = lerp(coarse(i0, j0, k0), coarse(i1, j0, k0), tx);
        const Scalar c10 = lerp(coarse(i0, j1, k0), coarse(i1, j1, k0), tx);
        const Scalar c01 = lerp(coarse(i0, j0, k1), coarse(i1, j0, k1), tx);
        const Scalar c11 = lerp(coarse(i0, j1, k1), coarse(i1, j1, k1), tx);
        out(i, j, k) = lerp(lerp(c00, c10, ty), lerp(c01, c11, ty), tz);
      }
    }
  }
  return out;
}

// Coarse-to-fine hierarchy; levels[0] is the finest.
template <typename Level>
struct Pyramid {
  std::vector<Level> levels;
  int factor = 2;

  int size() const { return int(levels.size()); }
  const Level& operator[](int l) const { return levels[l]; }
};

inline constexpr int kMinPyramidDim = 4;

// Dims of each level, checking that the coarsest keeps every dim >= 4.
inline std::vector<Dims> pyramid_dims(const Dims& finest, int levels) {
  require(levels >= 1, ErrorCode::InvalidArgument, "pyramid needs at least one level");
  std::vector<Dims> out{finest};
  for (int l = 1; l < levels; ++l) out.push_back(half_dims(out.back()));
  require((out.back() >= kMinPyramidDim).all(), ErrorCode::InvalidArgument,
          std::to_string(levels) + " pyramid levels shrink " + dims_string(finest) + " to " +
              dims_string(out.back()) + ", below the minimum of 4");
  return out;
}

template <typename Scalar>
Pyramid<BasicVolume<Scalar>> build_pyramid(const BasicVolume<Scalar>& vol, int levels) {
  require_valid(vol, "build_pyramid");
  pyramid_dims(vol.dims, levels);
  Pyramid<BasicVolume<Scalar>> pyr;
  pyr.levels.push_back(vol);
  for (int l = 1; l < levels; ++l) pyr.levels.push_back(downsample2(pyr.levels.back()));
  return pyr;
}

}  // namespace svr
