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

#include "svrkit/warp.hpp"

namespace svr {

// Fills voxels flagged in `holes` by multi-scale normalized convolution: (value,
// confidence) pairs are block-averaged until the coarsest level has no holes,
// then coarse estimates are upsampled and blended into under-observed voxels on
// the way back down. Passes beyond the first run Jacobi relaxation (6-neighbour
// averaging) over the hole voxels. Observed voxels are returned unchanged.
Volume fill_holes(const Volume& vol, const Mask& holes, int passes = 1);

// Holes of a normalized splat reconstruction, using the same threshold as normalize_splat.
Mask holes_from_weights(const Volume& weights, double eps);

}  // namespace svr
