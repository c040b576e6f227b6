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

#include "svrkit/phantom.hpp"

#include <cmath>

#include "svrkit/random.hpp"

namespace svr {

Volume blob_phantom(const Dims& dims, int blobs, std::uint64_t seed) {
  require(blobs >= 1, ErrorCode::InvalidArgument, "blob_phantom: need at least one blob");
  Rng rng(seed);
  Volume vol(dims);
  const Eigen::Array3d size = dims.cast<double>();
  const double scale = size.minCoeff();
  for (int b = 0; b < blobs; ++b) {
    Eigen::Array3d c;
    for (int a = 0; a < 3; ++a) c[a] = rng.uniform(0.1, 0.9) * (size[a] - 1);
    const double sigma = rng.uniform(0.05, 0.1) * scale;
    const double amp = rng.uniform(0.3, 1.0);
    const double inv = 1.0 / (2.0 * sigma * sigma);
    for (int k = 0; k < dims[2]; ++k)
      for (int j = 0; j < dims[1]; ++j)
        for (int i = 0; i < dims[0]; ++i) {
          const double r2 = (Eigen::Array3d(i, j, k) - c).square().sum();
          vol(i, j, k) += amp * std::exp(-r2 * inv);
        }
  }
  const double peak = vol.data.maxCoeff();
  if (peak > 0) vol.data /= peak;
  return vol;
}

}  // namespace svr
