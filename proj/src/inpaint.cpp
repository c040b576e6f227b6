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

#include "svrkit/inpaint.hpp"

#include <vector>

namespace svr {

namespace {

struct Level {
  Volume value;
  Volume confidence;  // fraction of observed fine voxels, in [0, 1]
};

Level pull_level(const Level& fine) {
  const Dims cd = half_dims(fine.value.dims);
  Level coarse{Volume(cd), Volume(cd)};
  Volume mass(cd), count(cd);
  const Dims& fd = fine.value.dims;
  for (int k = 0; k < fd[2]; ++k)
    for (int j = 0; j < fd[1]; ++j)
      for (int i = 0; i < fd[0]; ++i) {
        const double w = fine.confidence(i, j, k);
        mass(i / 2, j / 2, k / 2) += w;
        coarse.value(i / 2, j / 2, k / 2) += w * fine.value(i, j, k);
        count(i / 2, j / 2, k / 2) += 1.0;
      }
  for (Eigen::Index n = 0; n < mass.data.size(); ++n) {
    coarse.value.data[n] = mass.data[n] > 0 ? coarse.value.data[n] / mass.data[n] : 0.0;
    coarse.confidence.data[n] = mass.data[n] / count.data[n];
  }
  return coarse;
}

bool has_holes(const Level& l) { return (l.confidence.data.array() <= 0.0).any(); }

}  // namespace

Mask holes_from_weights(const Volume& weights, double eps) {
  return weights.data.array() < eps;
}

Volume fill_holes(const Volume& vol, const Mask& holes, int passes) {
  require_valid(vol, "fill_holes");
  require(passes >= 1, ErrorCode::InvalidArgument, "fill_holes: passes must be >= 1");
  require(holes.size() == vol.data.size(), ErrorCode::GeometryMismatch,
          "fill_holes: hole mask length does not match the volume");
  if (!holes.any()) return vol;
  require(!holes.all(), ErrorCode::InvalidArgument,
          "fill_holes: every voxel is a hole, nothing to extrapolate from");

  std::vector<Level> pyr;
  {
    Level base{vol, Volume(vol.dims, vol.spacing, 1.0)};
    for (Eigen::Index n = 0; n < holes.size(); ++n)
      if (holes[n]) {
        base.value.data[n] = 0.0;
        base.confidence.data[n] = 0.0;
      }
    pyr.push_back(std::move(base));
  }
  while (has_holes(pyr.back())) pyr.push_back(pull_level(pyr.back()));

  for (int l = int(pyr.size()) - 2; l >= 0; --l) {
    const Volume up = upsample2(pyr[l + 1].value, pyr[l].value.dims);
    Level& cur = pyr[l];
    for (Eigen::Index n = 0; n < up.data.size(); ++n) {
      const double w = cur.confidence.data[n];
      cur.value.data[n] = w * cur.value.data[n] + (1.0 - w) * up.data[n];
    }
  }

  Volume out = vol;
  for (Eigen::Index n = 0; n < holes.size(); ++n)
    if (holes[n]) out.data[n] = pyr[0].value.data[n];

  std::vector<Eigen::Index> hole_index;
  for (Eigen::Index n = 0; n < holes.size(); ++n)
    if (holes[n]) hole_index.push_back(n);
  const Dims& d = vol.dims;
  const Eigen::Index sx = 1, sy = d[0], sz = Eigen::Index(d[0]) * d[1];
  for (int pass = 1; pass < passes; ++pass) {
    const Eigen::VectorXd prev = out.data;
    for (const Eigen::Index n : hole_index) {
      const int i = int(n % d[0]);
      const int j = int((n / d[0]) % d[1]);
      const int k = int(n / sz);
      double sum = 0.0;
      int cnt = 0;
      if (i > 0) sum += prev[n - sx], ++cnt;
      if (i + 1 < d[0]) sum += prev[n + sx], ++cnt;
      if (j > 0) sum += prev[n - sy], ++cnt;
      if (j + 1 < d[1]) sum += prev[n + sy], ++cnt;
      if (k > 0) sum += prev[n - sz], ++cnt;
      if (k + 1 < d[2]) sum += prev[n + sz], ++cnt;
      if (cnt > 0) out.data[n] = sum / cnt;
    }
  }
  return out;
}

}  // namespace svr
