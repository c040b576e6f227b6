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

#include "svrkit/simulate.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace svr {

Eigen::Matrix3d euler_zyx(const Eigen::Vector3d& euler_deg) {
  const Eigen::Vector3d a = euler_deg * (std::numbers::pi / 180.0);
  return (Eigen::AngleAxisd(a.z(), Eigen::Vector3d::UnitZ()) *
          Eigen::AngleAxisd(a.y(), Eigen::Vector3d::UnitY()) *
          Eigen::AngleAxisd(a.x(), Eigen::Vector3d::UnitX()))
      .toRotationMatrix();
}

Eigen::Matrix3d RigidParams::rotation() const { return euler_zyx(euler_deg); }

void SimConfig::validate() const {
  auto check = [](bool ok, const char* msg) { require(ok, ErrorCode::InvalidConfig, msg); };
  check(knots_min >= 2 && knots_max >= knots_min, "knots range must satisfy 2 <= min <= max");
  check(std::isfinite(euler_max) && euler_max >= 0, "euler_max must be >= 0");
  check(std::isfinite(trans_max) && trans_max >= 0, "trans_max must be >= 0");
  check(psf_width >= 1, "psf_width must be >= 1");
  check(stride >= 1, "stride must be >= 1");
  check(std::isfinite(noise_sigma) && noise_sigma >= 0, "noise_sigma must be >= 0");
  check(gamma_lo > 0 && gamma_hi >= gamma_lo && std::isfinite(gamma_hi),
        "gamma range must satisfy 0 < lo <= hi");
}

Eigen::MatrixXd clamped_bspline(const Eigen::MatrixXd& control, int samples) {
  const int n = int(control.rows());
  require(n >= 1 && samples >= 1, ErrorCode::InvalidArgument,
          "clamped_bspline: need control points and samples");
  Eigen::MatrixXd out(samples, control.cols());
  if (n == 1) {
    out.rowwise() = control.row(0);
    return out;
  }
  const int p = std::min(3, n - 1);
  // Knot vector: p+1 zeros, n-p-1 uniform interior knots, p+1 ones.
  std::vector<double> knots(n + p + 1);
  for (int i = 0; i < int(knots.size()); ++i) {
    if (i <= p)
      knots[i] = 0.0;
    else if (i >= n)
      knots[i] = 1.0;
    else
      knots[i] = double(i - p) / double(n - p);
  }
  for (int s = 0; s < samples; ++s) {
    const double u = samples == 1 ? 0.0 : double(s) / double(samples - 1);
    int span = p;
    while (span < n - 1 && u >= knots[span + 1]) ++span;
    // de Boor recursion on the p+1 active control points.
    Eigen::MatrixXd d(p + 1, control.cols());
    for (int j = 0; j <= p; ++j) d.row(j) = control.row(span - p + j);
    for (int r = 1; r <= p; ++r)
      for (int j = p; j >= r; --j) {
        const int i = span - p + j;
        const double denom = knots[i + p + 1 - r] - knots[i];
        const double alpha = denom > 0 ? (u - knots[i]) / denom : 0.0;
        d.row(j) = (1.0 - alpha) * d.row(j - 1) + alpha * d.row(j);
      }
    out.row(s) = d.row(p);
  }
  return out;
}

std::vector<int> interleave_order(int K) {
  std::vector<int> order(K);
  const int evens = (K + 1) / 2;
  for (int k = 0; k < K; ++k) order[k] = (k % 2 == 0) ? k / 2 : evens + k / 2;
  return order;
}

Eigen::Vector3d grid_center(const Dims& dims) {
  return (dims.cast<double>() - 1.0).matrix() / 2.0;
}

SliceTrajectory gen_trajectory(int K, const SimConfig& cfg, Rng& rng,
                               const Eigen::Vector3d& center) {
  require(K >= 2, ErrorCode::InvalidArgument, "gen_trajectory: need at least 2 slices");
  cfg.validate();
  const int knots = rng.uniform_int(cfg.knots_min, cfg.knots_max);
  Eigen::MatrixXd control(knots, 6);
  for (int i = 0; i < knots; ++i) {
    for (int a = 0; a < 3; ++a) control(i, a) = rng.uniform(-cfg.euler_max, cfg.euler_max);
    for (int a = 0; a < 3; ++a) control(i, 3 + a) = rng.uniform(-cfg.trans_max, cfg.trans_max);
  }
  const Eigen::MatrixXd temporal = clamped_bspline(control, K);
  const std::vector<int> order = cfg.interleave ? interleave_order(K) : [&] {
    std::vector<int> id(K);
    for (int k = 0; k < K; ++k) id[k] = k;
    return id;
  }();
  SliceTrajectory traj;
  traj.center = center;
  traj.params.resize(K);
  for (int k = 0; k < K; ++k) {
    traj.params[k].euler_deg = temporal.row(order[k]).head<3>().transpose();
    traj.params[k].trans = temporal.row(order[k]).tail<3>().transpose();
  }
  return traj;
}

MotionStack rasterize_motion(const SliceTrajectory& traj, const StackGeometry& g) {
  require(int(traj.params.size()) == g.K, ErrorCode::GeometryMismatch,
          "rasterize_motion: trajectory has " + std::to_string(traj.params.size()) +
              " slices, stack has " + std::to_string(g.K));
  MotionStack motion(g);
  for (int k = 0; k < g.K; ++k) {
    const Eigen::Matrix3d R = traj.params[k].rotation();
    const Eigen::Vector3d shift = traj.center + traj.params[k].trans;
    auto field = motion.slice(k);
    for (int r = 0; r < g.H; ++r)
      for (int c = 0; c < g.W; ++c) {
        const Eigen::Vector3d q = g.nominal(k, r, c);
        field.row(Eigen::Index(r) * g.W + c) = (R * (q - traj.center) + shift - q).transpose();
      }
  }
  return motion;
}

Acquisition acquire(const Volume& vol, const SliceTrajectory& traj, const SimConfig& cfg,
                    Rng& rng) {
  cfg.validate();
  require_valid(vol, "acquire");
  const StackGeometry g = StackGeometry::for_grid(vol.dims, cfg.axis, cfg.stride, cfg.psf_width);
  Acquisition acq;
  acq.trajectory = traj;
  acq.motion = rasterize_motion(traj, g);
  acq.stack = slice_pull(vol, acq.motion, Psf::boxcar(cfg.psf_width));
  acq.gamma = rng.uniform(cfg.gamma_lo, cfg.gamma_hi);

  Eigen::VectorXd& f = acq.stack.data;
  if (cfg.noise_sigma > 0)
    for (Eigen::Index n = 0; n < f.size(); ++n) f[n] += cfg.noise_sigma * rng.normal();
  if (acq.gamma != 1.0) {
    const double m = f.cwiseAbs().maxCoeff();
    if (m > 0)
      for (Eigen::Index n = 0; n < f.size(); ++n)
        f[n] = std::copysign(m * std::pow(std::abs(f[n]) / m, acq.gamma), f[n]);
  }
  return acq;
}

Acquisition simulate(const Volume& vol, const SimConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  const StackGeometry g = StackGeometry::for_grid(vol.dims, cfg.axis, cfg.stride, cfg.psf_width);
  require(g.K >= 2, ErrorCode::GeometryMismatch, "simulate: stack needs at least 2 slices");
  const SliceTrajectory traj = gen_trajectory(g.K, cfg, rng, grid_center(vol.dims));
  return acquire(vol, traj, cfg, rng);
}

}  // namespace svr
