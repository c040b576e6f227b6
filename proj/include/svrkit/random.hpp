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
#include <random>

namespace svr {

// Portable random stream: 64-bit Mersenne Twister (std::mt19937_64, whose output
// sequence is fixed by the C++ standard) with hand-written transforms, since the
// standard distributions are implementation-defined.
//   uniform(): (next() >> 11) * 2^-53, in [0, 1)
//   normal():  Box-Muller cosine branch on two uniforms, 1 - u1 guarding log(0)
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Integer in [lo, hi] inclusive.
  int uniform_int(int lo, int hi);
  double normal();

 private:
  std::mt19937_64 engine_;
};

}  // namespace svr
