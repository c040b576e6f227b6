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

#include "svrkit/config.hpp"

#include <fstream>

namespace svr {

using nlohmann::json;

const std::vector<JobConfig::Key>& JobConfig::keys() {
  static const std::vector<Key> table = [] {
    const SimConfig s;
    const ReconConfig r;
    return std::vector<Key>{
        // simulation
        {"knots-min", s.knots_min, "fewest B-spline control points per trajectory"},
        {"knots-max", s.knots_max, "most B-spline control points per trajectory"},
        {"euler-max", s.euler_max, "rotation range, degrees (+/-)"},
        {"trans-max", s.trans_max, "translation range, voxels (+/-)"},
        {"psf", s.psf_width, "boxcar PSF width along the slicing axis, voxels"},
        {"stride", s.stride, "slice spacing, voxels"},
        {"noise", s.noise_sigma, "Gaussian noise standard deviation"},
        {"gamma-lo", s.gamma_lo, "lower bound of the gamma exponent"},
        {"gamma-hi", s.gamma_hi, "upper bound of the gamma exponent"},
        {"interleave", s.interleave, "two-shot interleaved slice order"},
        {"axis", "z", "slicing axis: x, y or z"},
        {"seed", 0, "random seed"},
        // reconstruction
        {"lambda", r.lambda, "coupling weight between per-stack reconstructions"},
        {"levels", r.levels, "pyramid levels"},
        {"outer-iters", r.outer_iters, "block-coordinate sweeps per level"},
        {"v-warmup", r.v_warmup, "volume-only sweeps at the start of each level"},
        {"cg-iters", r.cg_iters, "conjugate-gradient iterations per volume update"},
        {"cg-tol", r.cg_tol, "relative CG residual tolerance"},
        {"gn-iters", r.gn_iters, "Gauss-Newton steps per slice per sweep"},
        {"step-max", r.step_max, "largest displacement change per motion step, voxels"},
        {"armijo", r.armijo, "backtracking shrink factor"},
        {"max-backtracks", r.max_backtracks, "backtracking attempts per motion step"},
        {"tikhonov-eps", r.tikhonov_eps, "diagonal regulariser of the volume update"},
        {"hole-eps", r.hole_eps, "hole threshold relative to the largest splat weight"},
        {"basis", "rigid", "motion basis: rigid or dense"},
        {"passes", 8, "hole-filling passes"},
        {"threads", 0, "worker threads (0 = runtime default)"},
        // paths
        {"in", "", "input volume (.nii)"},
        {"out-stack", "", "output slice stack (.nii)"},
        {"out-motion", "", "output motion (.svrm)"},
        {"out-sidecar", "", "output JSON sidecar"},
    };
  }();
  return table;
}

JobConfig::JobConfig() : values_(json::object()) {
  for (const Key& k : keys()) values_[k.name] = k.default_value;
}

void JobConfig::set(const std::string& key, const json& value) {
  auto it = values_.find(key);
  require(it != values_.end(), ErrorCode::InvalidConfig, "unknown config key '" + key + "'");
  const json& current = *it;
  const bool ok = (current.is_number_integer() && value.is_number_integer()) ||
                  (current.is_number_float() && value.is_number()) ||
                  (current.is_boolean() && value.is_boolean()) ||
                  (current.is_string() && value.is_string());
  require(ok, ErrorCode::InvalidConfig,
          "config key '" + key + "' expects a " + current.type_name() + ", got " +
              value.type_name());
  *it = current.is_number_float() ? json(value.get<double>()) : value;
}

const json& JobConfig::get(const std::string& key) const {
  auto it = values_.find(key);
  require(it != values_.end(), ErrorCode::InvalidConfig, "unknown config key '" + key + "'");
  return *it;
}

void JobConfig::merge(const json& doc) {
  require(doc.is_object(), ErrorCode::InvalidConfig, "config document must be a JSON object");
  for (auto it = doc.begin(); it != doc.end(); ++it) set(it.key(), it.value());
}

void JobConfig::merge_file(const std::string& path) {
  std::ifstream in(path);
  require(bool(in), ErrorCode::Io, "cannot open config '" + path + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::InvalidConfig, "config '" + path + "': " + e.what());
  }
  merge(doc);
}

SimConfig JobConfig::sim() const {
  SimConfig s;
  s.knots_min = get("knots-min").get<int>();
  s.knots_max = get("knots-max").get<int>();
  s.euler_max = get("euler-max").get<double>();
  s.trans_max = get("trans-max").get<double>();
  s.psf_width = get("psf").get<int>();
  s.stride = get("stride").get<int>();
  s.noise_sigma = get("noise").get<double>();
  s.gamma_lo = get("gamma-lo").get<double>();
  s.gamma_hi = get("gamma-hi").get<double>();
  s.interleave = get("interleave").get<bool>();
  s.axis = parse_axis(get("axis").get<std::string>());
  require(get("seed").get<long long>() >= 0, ErrorCode::InvalidConfig, "seed must be >= 0");
  s.seed = get("seed").get<std::uint64_t>();
  s.validate();
  return s;
}

ReconConfig JobConfig::recon() const {
  ReconConfig r;
  r.lambda = get("lambda").get<double>();
  r.levels = get("levels").get<int>();
  r.outer_iters = get("outer-iters").get<int>();
  r.v_warmup = get("v-warmup").get<int>();
  r.cg_iters = get("cg-iters").get<int>();
  r.cg_tol = get("cg-tol").get<double>();
  r.gn_iters = get("gn-iters").get<int>();
  r.step_max = get("step-max").get<double>();
  r.armijo = get("armijo").get<double>();
  r.max_backtracks = get("max-backtracks").get<int>();
  r.tikhonov_eps = get("tikhonov-eps").get<double>();
  r.hole_eps = get("hole-eps").get<double>();
  const std::string basis = get("basis").get<std::string>();
  require(basis == "rigid" || basis == "dense", ErrorCode::InvalidConfig,
          "basis must be 'rigid' or 'dense'");
  r.basis = basis == "rigid" ? BasisKind::Rigid : BasisKind::Dense;
  r.validate();
  return r;
}

}  // namespace svr
