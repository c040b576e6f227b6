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

#include <cstdint>

#include "svrkit/grid.hpp"

namespace svr {

// Smooth synthetic head-like volume: a sum of random Gaussian blobs spread over the
// grid, scaled to a maximum of 1. Deterministic per seed.
Volume blob_phantom(const Dims& dims, int blobs = 32, std::uint64_t seed = 0);

}  // namespace svr
