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

#include <optional>
#include <vector>

#include "svrkit/grid.hpp"
#include "svrkit/warp.hpp"

namespace svr {

enum class BasisKind { Dense, Rigid };

// Per-slice motion parameterisation. Dense: one free 3-vector per pixel. Rigid:
// three translations followed by three infinitesimal rotations about `center`
// (about x, y, z), as 3HW x 6 columns laid out like a MotionStack slice.
struct MotionBasis {
  BasisKind kind = BasisKind::Rigid;
  Eigen::Vector3d center = Eigen::Vector3d::Zero();

  Eigen::MatrixXd rigid_columns(const StackGeometry& g, int k) const;
  // Least-squares projection of every slice onto the basis (identity for Dense).
  MotionStack project(const MotionStack& u) const;
};

struct ReconConfig {
  double lambda = 0.5;
  int levels = 3;
  int outer_iters = 6;
  int v_warmup = 15;         // volume-only sweeps before motion updates, per level
  int cg_iters = 40;
  double cg_tol = 1e-6;
  int gn_iters = 2;
  double step_max = 2.0;     // voxels per accepted u-step, at each level
  double armijo = 0.5;       // step shrink factor when backtracking
  int max_backtracks = 10;
  double tikhonov_eps = 1e-6;
  double hole_eps = kDefaultHoleEps;  // relative to the largest splat weight
  BasisKind basis = BasisKind::Rigid;

  void validate() const;
};

struct SvrState {
  std::vector<Volume> volumes;        // v^n
  std::vector<MotionStack> motions;   // u^n
  int level = 0;
  std::vector<double> objective_history;
};

// Stacks coupled to stack n in the penalty: both others for three stacks, the
// other one for two, none for a single stack.
std::vector<int> coupling_partners(int n, int stack_count);

// Sum over stacks of |U^n v^n - f^n|^2 plus lambda times the pairwise coupling
// |v^i - v^j|^2 over cyclic pairs (one pair for two stacks, none for one).
double objective(const SvrState& state, const std::vector<SliceStack>& stacks,
                 const ReconConfig& cfg);

double data_term(const Volume& v, const MotionStack& u, const SliceStack& f);

struct VUpdateResult {
  Volume volume;
  int iterations = 0;
  double relative_residual = 0.0;
  bool converged = false;
};

// Solves (U*U + (partners lambda + eps) I) v = U*f + partners lambda vbar by
// conjugate gradients with U, U* applied matrix-free, starting from `init`
// (or zero).
VUpdateResult v_update(const SliceStack& f, const MotionStack& u, const Volume& vbar,
                       int partners, const ReconConfig& cfg,
                       const Volume* init = nullptr);

inline constexpr double kLevenbergDamping = 1e-9;

// Gauss-Newton increment S delta for slice k (3HW, component-major) before any
// step limiting: (J^T J + mu I) delta = J^T r with r = f_k - U_k v and mu equal to
// kLevenbergDamping times the mean diagonal of J^T J. Returns nullopt for a flat
// (singular) slice.
std::optional<Eigen::VectorXd> gauss_newton_step(const SliceStack& f, const Volume& v,
                                                 const Gradient<double>& grad,
                                                 const MotionStack& u, int k,
                                                 const MotionBasis& basis);

struct UUpdateResult {
  MotionStack motion;
  std::vector<int> flagged_slices;  // singular systems, left unchanged
  int rejected_steps = 0;           // slices where backtracking found no descent
};

// Per-slice Gauss-Newton steps with the step capped at cfg.step_max voxels and
// backtracking until the slice's data term does not increase.
UUpdateResult u_update(const SliceStack& f, const Volume& v, const MotionStack& u,
                       const MotionBasis& basis, const ReconConfig& cfg);

struct LevelReport {
  int level = 0;
  Dims dims = Dims::Ones();
  std::vector<double> objective;  // after initialisation and every accepted block step
  std::vector<double> cg_residuals;
  int rejected_v_steps = 0;
  int rejected_u_steps = 0;
  int flagged_slices = 0;
  std::optional<double> epe_compensated;  // foreground pixels, finest-level voxels, when truth is known
};

struct ReconReport {
  std::vector<LevelReport> levels;  // coarsest first
  Eigen::Index hole_voxels = 0;
  Eigen::Index total_voxels = 0;
  bool single_stack = false;
};

struct ReconResult {
  std::vector<MotionStack> motions;
  std::vector<Volume> volumes;  // per-stack reconstructions at the finest level
  Volume consensus;             // mean of `volumes`
  Volume fused;                 // normalized splat of all stacks with final motion
  Volume fused_weights;
  Mask holes;
  ReconReport report;
};

// Coarse-to-fine block coordinate descent over 1-3 stacks sharing the grid `dims`.
// `truth`, when given, is only used to report per-level compensated EPE over
// foreground_mask pixels.
ReconResult reconstruct(const std::vector<SliceStack>& stacks, const Dims& dims,
                        const ReconConfig& cfg,
                        const std::vector<MotionStack>* truth = nullptr);

}  // namespace svr
