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

// Test-only reference implementations, written without the library's sampling helpers.

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <cmath>
#include <vector>

#include "svrkit/random.hpp"
#include "svrkit/warp.hpp"

namespace svr::oracle {

// Position of pixel (k, r, c), PSF tap t, before displacement.
inline Eigen::Vector3d pixel_position(const StackGeometry& g, int k, int r, int c, int t) {
  const double through = g.spacing * k + 0.5 * (g.spacing - 1.0) + t - 0.5 * (g.slab - 1.0);
  switch (g.axis) {
    case Axis::X: return {through, double(c), double(r)};
    case Axis::Y: return {double(c), through, double(r)};
    default: return {double(c), double(r), through};
  }
}

// Explicit (K H W) x (Nx Ny Nz) slicing matrix with boxcar PSF of width g.slab.
inline Eigen::SparseMatrix<double> slicing_matrix(const MotionStack& u, const Dims& dims) {
  const StackGeometry& g = u.geometry;
  std::vector<Eigen::Triplet<double>> entries;
  const double tap_w = 1.0 / g.slab;
  Eigen::Index row = 0;
  for (int k = 0; k < g.K; ++k)
    for (int r = 0; r < g.H; ++r)
      for (int c = 0; c < g.W; ++c, ++row) {
        const Eigen::Vector3d d = u.at(k, r, c);
        for (int t = 0; t < g.slab; ++t) {
          const Eigen::Vector3d p = pixel_position(g, k, r, c, t) + d;
          const int i0 = int(std::floor(p.x())), j0 = int(std::floor(p.y())),
                    k0 = int(std::floor(p.z()));
          for (int corner = 0; corner < 8; ++corner) {
            const int i = i0 + (corner & 1), j = j0 + ((corner >> 1) & 1),
                      l = k0 + ((corner >> 2) & 1);
            if (i < 0 || j < 0 || l < 0 || i >= dims[0] || j >= dims[1] || l >= dims[2]) continue;
            const double w = (1.0 - std::abs(p.x() - i)) * (1.0 - std::abs(p.y() - j)) *
                             (1.0 - std::abs(p.z() - l));
            if (w <= 0.0) continue;
            entries.emplace_back(row, i + Eigen::Index(dims[0]) * (j + Eigen::Index(dims[1]) * l),
                                 tap_w * w);
          }
        }
      }
  Eigen::SparseMatrix<double> U(g.pixel_count(), voxel_count(dims));
  U.setFromTriplets(entries.begin(), entries.end());
  return U;
}

inline Volume random_volume(const Dims& dims, Rng& rng, double lo = 0.0, double hi = 1.0) {
  Volume v(dims);
  for (auto& x : v.data) x = rng.uniform(lo, hi);
  return v;
}

inline MotionStack random_motion(const StackGeometry& g, Rng& rng, double amplitude) {
  MotionStack u(g);
  for (auto& x : u.data) x = rng.uniform(-amplitude, amplitude);
  return u;
}

inline SliceStack random_stack(const StackGeometry& g, Rng& rng) {
  SliceStack f(g);
  for (auto& x : f.data) x = rng.uniform(-1.0, 1.0);
  return f;
}

inline Axis random_axis(Rng& rng) { return Axis(rng.uniform_int(0, 2)); }

}  // namespace svr::oracle
