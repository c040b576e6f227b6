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

#include <cmath>
#include <string>
#include <utility>

#include "svrkit/grid.hpp"

namespace svr {

enum class Axis : int { X = 0, Y = 1, Z = 2 };

inline const char* axis_name(Axis a) {
  return a == Axis::X ? "x" : (a == Axis::Y ? "y" : "z");
}

Axis parse_axis(const std::string& s);

// Layout of a stack of K slices of H rows by W columns acquired along `axis`.
// Slice k is centred on the through-plane coordinate spacing * k + (spacing - 1) / 2,
// i.e. it covers the k-th slab of `spacing` voxels. In-plane, column c and row r
// map onto the two remaining axes in increasing order (z: (x, y); y: (x, z); x: (y, z)).
struct StackGeometry {
  int K = 1;
  int H = 1;
  int W = 1;
  double spacing = 1.0;  // through-plane slice spacing, reconstruction voxels
  Axis axis = Axis::Z;
  int slab = 1;  // through-plane PSF support in voxels

  Eigen::Index pixels_per_slice() const { return Eigen::Index(H) * W; }
  Eigen::Index pixel_count() const { return Eigen::Index(K) * H * W; }

  int through_axis() const { return int(axis); }
  int col_axis() const { return axis == Axis::X ? 1 : 0; }
  int row_axis() const { return axis == Axis::Z ? 1 : 2; }

  double slice_center(int k) const { return spacing * k + (spacing - 1.0) / 2.0; }

  // Nominal 3D position of pixel (k, r, c) shifted by `offset` voxels through-plane.
  Eigen::Vector3d nominal(int k, int r, int c, double offset = 0.0) const {
    Eigen::Vector3d q;
    q[col_axis()] = c;
    q[row_axis()] = r;
    q[through_axis()] = slice_center(k) + offset;
    return q;
  }

  bool operator==(const StackGeometry& o) const {
    return K == o.K && H == o.H && W == o.W && spacing == o.spacing && axis == o.axis &&
           slab == o.slab;
  }

  bool valid() const { return K >= 1 && H >= 1 && W >= 1 && spacing > 0 && slab >= 1; }

  // In-plane extents match the grid and the slices stay inside it through-plane.
  bool fits(const Dims& dims) const {
    return valid() && W == dims[col_axis()] && H == dims[row_axis()] &&
           spacing * K <= dims[through_axis()] + 1e-9;
  }

  std::string describe() const;

  // Stack geometry that tiles `dims` along `axis` with the given spacing; a partial
  // last slab is dropped.
  static StackGeometry for_grid(const Dims& dims, Axis axis, double spacing, int slab);
};

// Grid dims implied by a stack: in-plane extents plus round(K * spacing) through-plane.
Dims grid_dims_for(const StackGeometry& g);

template <typename Scalar>
struct BasicSliceStack {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  StackGeometry geometry;
  Vector data;  // K * H * W, slice-major then row-major

  BasicSliceStack() = default;
  explicit BasicSliceStack(const StackGeometry& g, Scalar fill = Scalar(0))
      : geometry(g), data(Vector::Constant(g.pixel_count(), fill)) {
    require(g.valid(), ErrorCode::InvalidArgument, "invalid stack geometry " + g.describe());
  }

  Eigen::Index index(int k, int r, int c) const {
    return (Eigen::Index(k) * geometry.H + r) * geometry.W + c;
  }
  Scalar& operator()(int k, int r, int c) { return data[index(k, r, c)]; }
  Scalar operator()(int k, int r, int c) const { return data[index(k, r, c)]; }

  auto slice(int k) { return data.segment(Eigen::Index(k) * geometry.pixels_per_slice(), geometry.pixels_per_slice()); }
  auto slice(int k) const { return data.segment(Eigen::Index(k) * geometry.pixels_per_slice(), geometry.pixels_per_slice()); }

  bool valid() const {
    return geometry.valid() && data.size() == geometry.pixel_count() && data.allFinite();
  }
};

// Per-slice displacement fields in reconstruction voxels. Storage is
// slice-major, then component (x, y, z), then row-major pixels.
template <typename Scalar>
struct BasicMotionStack {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using SliceField = Eigen::Map<Eigen::Matrix<Scalar, Eigen::Dynamic, 3>>;
  using ConstSliceField = Eigen::Map<const Eigen::Matrix<Scalar, Eigen::Dynamic, 3>>;

  StackGeometry geometry;
  Vector data;

  BasicMotionStack() = default;
  explicit BasicMotionStack(const StackGeometry& g)
      : geometry(g), data(Vector::Zero(3 * g.pixel_count())) {
    require(g.valid(), ErrorCode::InvalidArgument, "invalid stack geometry " + g.describe());
  }

  // HW x 3 view of slice k; column = displacement component.
  SliceField slice(int k) {
    const auto n = geometry.pixels_per_slice();
    return SliceField(data.data() + 3 * n * k, n, 3);
  }
  ConstSliceField slice(int k) const {
    const auto n = geometry.pixels_per_slice();
    return ConstSliceField(data.data() + 3 * n * k, n, 3);
  }

  Eigen::Matrix<Scalar, 3, 1> at(int k, int r, int c) const {
    return slice(k).row(Eigen::Index(r) * geometry.W + c).transpose();
  }

  bool valid() const {
    return geometry.valid() && data.size() == 3 * geometry.pixel_count() && data.allFinite();
  }
};

using SliceStack = BasicSliceStack<double>;
using MotionStack = BasicMotionStack<double>;

// Through-plane point spread function with taps at voxel-centred offsets
// -(w-1)/2 ... (w-1)/2 around the slice centre.
struct Psf {
  Eigen::VectorXd weights = Eigen::VectorXd::Ones(1);

  int width() const { return int(weights.size()); }
  double offset(int tap) const { return tap - (width() - 1) / 2.0; }

  bool valid() const {
    return weights.size() >= 1 && (weights.array() >= 0).all() &&
           std::abs(weights.sum() - 1.0) < 1e-12;
  }

  static Psf boxcar(int width) {
    require(width >= 1, ErrorCode::InvalidArgument, "psf width must be >= 1");
    return Psf{Eigen::VectorXd::Constant(width, 1.0 / width)};
  }
};

template <typename Scalar>
struct BasicSplatVolume {
  BasicVolume<Scalar> values;
  BasicVolume<Scalar> weights;
};

using SplatVolume = BasicSplatVolume<double>;
using Mask = Eigen::Array<bool, Eigen::Dynamic, 1>;

namespace detail {

inline void check_pull_geometry(const Dims& dims, const StackGeometry& g, const Psf& psf,
                                const char* what) {
  require(psf.valid(), ErrorCode::InvalidArgument,
          std::string(what) + ": psf weights must be nonnegative and sum to 1");
  require(g.fits(dims), ErrorCode::GeometryMismatch,
          std::string(what) + ": stack " + g.describe() + " does not fit grid " +
              dims_string(dims));
}

// Visits the up-to-8 in-bounds lattice neighbours of `pos` with their
// trilinear weights. Out-of-bounds corners are dropped (zero padding).
template <typename Fn>
inline void for_each_corner(const Dims& dims, const Eigen::Vector3d& pos, Fn&& fn) {
  const double fx = std::floor(pos[0]), fy = std::floor(pos[1]), fz = std::floor(pos[2]);
  if (!(std::isfinite(fx) && std::isfinite(fy) && std::isfinite(fz))) return;
  if (fx < -1 || fy < -1 || fz < -1 || fx > dims[0] || fy > dims[1] || fz > dims[2]) return;
  const int x0 = int(fx), y0 = int(fy), z0 = int(fz);
  const double tx = pos[0] - fx, ty = pos[1] - fy, tz = pos[2] - fz;
  const double wx[2] = {1.0 - tx, tx}, wy[2] = {1.0 - ty, ty}, wz[2] = {1.0 - tz, tz};
  for (int dz = 0; dz < 2; ++dz) {
    const int z = z0 + dz;
    if (z < 0 || z >= dims[2] || wz[dz] == 0.0) continue;
    for (int dy = 0; dy < 2; ++dy) {
      const int y = y0 + dy;
      if (y < 0 || y >= dims[1] || wy[dy] == 0.0) continue;
      for (int dx = 0; dx < 2; ++dx) {
        const int x = x0 + dx;
        if (x < 0 || x >= dims[0] || wx[dx] == 0.0) continue;
        fn(x + Eigen::Index(dims[0]) * (y + Eigen::Index(dims[1]) * z),
           wx[dx] * wy[dy] * wz[dz]);
      }
    }
  }
}

// Visits every PSF tap sample of slice k: fn(pixel-in-slice, tap weight, position).
template <typename Disp, typename Fn>
inline void for_each_sample(const StackGeometry& g, int k, const Disp& disp, const Psf& psf,
                            Fn&& fn) {
  for (int r = 0; r < g.H; ++r)
    for (int c = 0; c < g.W; ++c) {
      const Eigen::Index p = Eigen::Index(r) * g.W + c;
      const Eigen::Vector3d u(double(disp(p, 0)), double(disp(p, 1)), double(disp(p, 2)));
      for (int t = 0; t < psf.width(); ++t) {
        if (psf.weights[t] == 0.0) continue;
        fn(p, psf.weights[t], g.nominal(k, r, c, psf.offset(t)) + u);
      }
    }
}

}  // namespace detail

// Samples slice k of `vol` under the HW x 3 displacement `disp`; writes HW values.
template <typename Scalar, typename Disp, typename Out>
void pull_slice(const BasicVolume<Scalar>& vol, const StackGeometry& g, int k, const Disp& disp,
                const Psf& psf, Out&& out) {
  out.setZero();
  detail::for_each_sample(g, k, disp, psf, [&](Eigen::Index p, double tap_w, const Eigen::Vector3d& pos) {
    double acc = 0.0;
    detail::for_each_corner(vol.dims, pos, [&](Eigen::Index idx, double w) { acc += w * double(vol.data[idx]); });
    out[p] += Scalar(tap_w * acc);
  });
}

// Slicing: f_k = H_k U_k v with trilinear weights and zero padding.
template <typename Scalar>
BasicSliceStack<Scalar> slice_pull(const BasicVolume<Scalar>& vol,
                                   const BasicMotionStack<Scalar>& motion, const Psf& psf) {
  const StackGeometry& g = motion.geometry;
  detail::check_pull_geometry(vol.dims, g, psf, "slice_pull");
  require(motion.data.size() == 3 * g.pixel_count(), ErrorCode::GeometryMismatch,
          "slice_pull: motion payload size does not match its geometry");
  BasicSliceStack<Scalar> out(g);
#pragma omp parallel for schedule(static)
  for (int k = 0; k < g.K; ++k) {
    auto dst = out.slice(k);
    pull_slice(vol, g, k, motion.slice(k), psf, dst);
  }
  return out;
}

// Splatting: the exact adjoint of slice_pull, also accumulating the weights U*1.
// Accumulation runs serially in slice/pixel/tap order so results are reproducible
// irrespective of thread count.
template <typename Scalar>
BasicSplatVolume<Scalar> splat_push(const BasicSliceStack<Scalar>& stack,
                                    const BasicMotionStack<Scalar>& motion, const Psf& psf,
                                    const Dims& dims) {
  const StackGeometry& g = motion.geometry;
  detail::check_pull_geometry(dims, g, psf, "splat_push");
  require(stack.geometry == g && stack.data.size() == g.pixel_count(),
          ErrorCode::GeometryMismatch,
          "splat_push: stack " + stack.geometry.describe() + " vs motion " + g.describe());
  BasicSplatVolume<Scalar> out{BasicVolume<Scalar>(dims), BasicVolume<Scalar>(dims)};
  for (int k = 0; k < g.K; ++k) {
    const auto src = stack.slice(k);
    detail::for_each_sample(g, k, motion.slice(k), psf,
                            [&](Eigen::Index p, double tap_w, const Eigen::Vector3d& pos) {
                              const double value = double(src[p]);
                              detail::for_each_corner(dims, pos, [&](Eigen::Index idx, double w) {
                                out.values.data[idx] += Scalar(value * tap_w * w);
                                out.weights.data[idx] += Scalar(tap_w * w);
                              });
                            });
  }
  return out;
}

inline constexpr double kDefaultHoleEps = 1e-3;

// Hole threshold relative to the largest accumulated weight.
template <typename Scalar>
double hole_threshold(const BasicSplatVolume<Scalar>& splat, double rel = kDefaultHoleEps) {
  const double scale = double(splat.weights.data.maxCoeff());
  return scale > 0 ? rel * scale : rel;
}

// values / weights where weights >= eps; other voxels are zero and flagged as holes.
template <typename Scalar>
std::pair<BasicVolume<Scalar>, Mask> normalize_splat(const BasicSplatVolume<Scalar>& splat,
                                                     double eps) {
  require(eps > 0, ErrorCode::InvalidArgument, "normalize_splat: eps must be > 0");
  require((splat.values.dims == splat.weights.dims).all(), ErrorCode::GeometryMismatch,
          "normalize_splat: values and weights differ in dims");
  BasicVolume<Scalar> out(splat.values.dims, splat.values.spacing);
  Mask holes(out.data.size());
  for (Eigen::Index n = 0; n < out.data.size(); ++n) {
    const Scalar w = splat.weights.data[n];
    holes[n] = !(double(w) >= eps);
    out.data[n] = holes[n] ? Scalar(0) : splat.values.data[n] / w;
  }
  return {std::move(out), std::move(holes)};
}

// Linearised composition u = coarse + residual.
template <typename Scalar>
BasicMotionStack<Scalar> compose_motion(const BasicMotionStack<Scalar>& coarse,
                                        const BasicMotionStack<Scalar>& residual) {
  require(coarse.geometry == residual.geometry && coarse.data.size() == residual.data.size(),
          ErrorCode::GeometryMismatch,
          "compose_motion: " + coarse.geometry.describe() + " vs " + residual.geometry.describe());
  BasicMotionStack<Scalar> out(coarse.geometry);
  out.data = coarse.data + residual.data;
  return out;
}

// Geometry of the next coarser pyramid level: in-plane halved (ceil), spacing and
// slab halved in coarse voxels, slice count unchanged.
StackGeometry coarsen(const StackGeometry& g);

// 2x2 in-plane block mean per slice.
SliceStack downsample2(const SliceStack& stack);

// Halves displacements and averages 2x2 pixel blocks.
MotionStack downsample2(const MotionStack& motion);

// Bilinear in-plane interpolation onto `fine` with components scaled by 2. Borders are
// extrapolated linearly so affine per-slice fields stay affine.
MotionStack upsample2(const MotionStack& coarse, const StackGeometry& fine);

// Nominal slice-pixel coordinates (tap offset 0), one row per pixel in storage order.
Eigen::MatrixX3d slice_coordinates(const StackGeometry& g);

}  // namespace svr
