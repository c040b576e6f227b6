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

#include "svrkit/solver.hpp"

#include <Eigen/Dense>

#include <cmath>

#include "svrkit/metrics.hpp"
#include "svrkit/simulate.hpp"

namespace svr {

Eigen::MatrixXd MotionBasis::rigid_columns(const StackGeometry& g, int k) const {
  const Eigen::Index n = g.pixels_per_slice();
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(3 * n, 6);
  for (int r = 0; r < g.H; ++r)
    for (int c = 0; c < g.W; ++c) {
      const Eigen::Index p = Eigen::Index(r) * g.W + c;
      const Eigen::Vector3d d = g.nominal(k, r, c) - center;
      for (int j = 0; j < 3; ++j) {
        S(j * n + p, j) = 1.0;
        const Eigen::Vector3d field = Eigen::Vector3d::Unit(j).cross(d);
        for (int a = 0; a < 3; ++a) S(a * n + p, 3 + j) = field[a];
      }
    }
  return S;
}

MotionStack MotionBasis::project(const MotionStack& u) const {
  if (kind == BasisKind::Dense) return u;
  MotionStack out(u.geometry);
  for (int k = 0; k < u.geometry.K; ++k) {
    const Eigen::MatrixXd S = rigid_columns(u.geometry, k);
    const Eigen::Map<const Eigen::VectorXd> uk(u.slice(k).data(), S.rows());
    const Eigen::VectorXd theta = S.colPivHouseholderQr().solve(uk);
    Eigen::Map<Eigen::VectorXd>(out.slice(k).data(), S.rows()) = S * theta;
  }
  return out;
}

void ReconConfig::validate() const {
  auto check = [](bool ok, const char* msg) { require(ok, ErrorCode::InvalidConfig, msg); };
  check(std::isfinite(lambda) && lambda >= 0, "lambda must be >= 0");
  check(levels >= 1, "levels must be >= 1");
  check(outer_iters >= 1 && cg_iters >= 1 && gn_iters >= 1, "iteration counts must be >= 1");
  check(cg_tol > 0 && step_max > 0 && tikhonov_eps > 0 && hole_eps > 0,
        "tolerances must be > 0");
  check(armijo > 0 && armijo < 1, "armijo factor must lie in (0, 1)");
  check(max_backtracks >= 0, "max_backtracks must be >= 0");
  check(v_warmup >= 0, "v_warmup must be >= 0");
}

std::vector<int> coupling_partners(int n, int stack_count) {
  if (stack_count <= 1) return {};
  if (stack_count == 2) return {1 - n};
  if (stack_count == 3) return {(n + 1) % 3, (n + 2) % 3};
  return {(n + stack_count - 1) % stack_count, (n + 1) % stack_count};
}

double data_term(const Volume& v, const MotionStack& u, const SliceStack& f) {
  require(u.geometry == f.geometry, ErrorCode::GeometryMismatch,
          "data_term: motion " + u.geometry.describe() + " vs stack " + f.geometry.describe());
  return (slice_pull(v, u, Psf::boxcar(f.geometry.slab)).data - f.data).squaredNorm();
}

double objective(const SvrState& state, const std::vector<SliceStack>& stacks,
                 const ReconConfig& cfg) {
  const int n = int(stacks.size());
  require(int(state.volumes.size()) == n && int(state.motions.size()) == n,
          ErrorCode::GeometryMismatch, "objective: state and stack counts differ");
  double total = 0.0;
  for (int s = 0; s < n; ++s) total += data_term(state.volumes[s], state.motions[s], stacks[s]);
  if (cfg.lambda > 0 && n >= 2) {
    const int pairs = n == 2 ? 1 : n;
    for (int i = 0; i < pairs; ++i) {
      const int j = (i + 1) % n;
      require((state.volumes[i].dims == state.volumes[j].dims).all(),
              ErrorCode::GeometryMismatch, "objective: reconstruction dims differ");
      total += cfg.lambda * (state.volumes[i].data - state.volumes[j].data).squaredNorm();
    }
  }
  return total;
}

VUpdateResult v_update(const SliceStack& f, const MotionStack& u, const Volume& vbar,
                       int partners, const ReconConfig& cfg, const Volume* init) {
  require(f.geometry == u.geometry, ErrorCode::GeometryMismatch,
          "v_update: stack " + f.geometry.describe() + " vs motion " + u.geometry.describe());
  require_valid(vbar, "v_update");
  const double coupling = partners * cfg.lambda;
  const double shift = coupling + cfg.tikhonov_eps;
  require(shift > 0, ErrorCode::InvalidConfig,
          "v_update: needs lambda > 0 with partner stacks or tikhonov_eps > 0");
  const Psf psf = Psf::boxcar(f.geometry.slab);
  const Dims& dims = vbar.dims;

  auto normal_op = [&](const Eigen::VectorXd& x) {
    Volume xv(dims, vbar.spacing);
    xv.data = x;
    Eigen::VectorXd out = splat_push(slice_pull(xv, u, psf), u, psf, dims).values.data;
    out += shift * x;
    return out;
  };

  Eigen::VectorXd b = splat_push(f, u, psf, dims).values.data;
  if (coupling > 0) b += coupling * vbar.data;

  VUpdateResult res;
  res.volume = Volume(dims, vbar.spacing);
  if (init) {
    require((init->dims == dims).all(), ErrorCode::GeometryMismatch,
            "v_update: initial guess dims differ from vbar");
    res.volume.data = init->data;
  }
  Eigen::VectorXd& x = res.volume.data;
  const double bnorm = b.norm();
  if (bnorm == 0.0) {
    x.setZero();
    res.converged = true;
    return res;
  }
  Eigen::VectorXd r = b - normal_op(x);
  Eigen::VectorXd p = r;
  double rs = r.squaredNorm();
  int it = 0;
  for (; it < cfg.cg_iters && std::sqrt(rs) > cfg.cg_tol * bnorm; ++it) {
    const Eigen::VectorXd Ap = normal_op(p);
    const double alpha = rs / p.dot(Ap);
    x += alpha * p;
    r -= alpha * Ap;
    const double rs_next = r.squaredNorm();
    p = r + (rs_next / rs) * p;
    rs = rs_next;
  }
  res.iterations = it;
  res.relative_residual = std::sqrt(rs) / bnorm;
  res.converged = res.relative_residual <= cfg.cg_tol;
  return res;
}

std::optional<Eigen::VectorXd> gauss_newton_step(const SliceStack& f, const Volume& v,
                                                 const Gradient<double>& grad,
                                                 const MotionStack& u, int k,
                                                 const MotionBasis& basis) {
  const StackGeometry& g = f.geometry;
  require(u.geometry == g, ErrorCode::GeometryMismatch,
          "gauss_newton_step: motion " + u.geometry.describe() + " vs stack " + g.describe());
  require(k >= 0 && k < g.K, ErrorCode::InvalidArgument, "gauss_newton_step: slice out of range");
  const Psf psf = Psf::boxcar(g.slab);
  const Eigen::Index n = g.pixels_per_slice();
  const auto uk = u.slice(k);

  Eigen::VectorXd pred(n);
  pull_slice(v, g, k, uk, psf, pred);
  const Eigen::VectorXd r = f.slice(k) - pred;

  // Volume gradients sampled at the current warp: rows of V_k.
  Eigen::MatrixX3d G(n, 3);
  for (int a = 0; a < 3; ++a) {
    Eigen::VectorXd col(n);
    pull_slice(grad[a], g, k, uk, psf, col);
    G.col(a) = col;
  }

  Eigen::VectorXd step = Eigen::VectorXd::Zero(3 * n);
  if (basis.kind == BasisKind::Dense) {
    const double trace = G.squaredNorm();
    if (!(trace > 0)) return std::nullopt;
    const double mu = kLevenbergDamping * trace / double(3 * n);
    for (Eigen::Index p = 0; p < n; ++p) {
      const double scale = r[p] / (G.row(p).squaredNorm() + mu);
      for (int a = 0; a < 3; ++a) step[a * n + p] = scale * G(p, a);
    }
    return step;
  }

  Eigen::MatrixXd J(n, 6);
  for (int row = 0; row < g.H; ++row)
    for (int c = 0; c < g.W; ++c) {
      const Eigen::Index p = Eigen::Index(row) * g.W + c;
      const Eigen::Vector3d gp = G.row(p).transpose();
      const Eigen::Vector3d d = g.nominal(k, row, c) - basis.center;
      J.block<1, 3>(p, 0) = gp.transpose();
      J.block<1, 3>(p, 3) = d.cross(gp).transpose();
    }
  Eigen::Matrix<double, 6, 6> N = J.transpose() * J;
  const double trace = N.trace();
  if (!(trace > 0)) return std::nullopt;
  N.diagonal().array() += kLevenbergDamping * trace / 6.0;
  const Eigen::Matrix<double, 6, 1> delta = N.ldlt().solve(J.transpose() * r);
  return basis.rigid_columns(g, k) * delta;
}

UUpdateResult u_update(const SliceStack& f, const Volume& v, const MotionStack& u,
                       const MotionBasis& basis, const ReconConfig& cfg) {
  const StackGeometry& g = f.geometry;
  require(u.geometry == g, ErrorCode::GeometryMismatch,
          "u_update: motion " + u.geometry.describe() + " vs stack " + g.describe());
  detail::check_pull_geometry(v.dims, g, Psf::boxcar(g.slab), "u_update");
  const Gradient<double> grad = gradient(v);
  const Psf psf = Psf::boxcar(g.slab);
  const Eigen::Index n = g.pixels_per_slice();

  UUpdateResult res;
  res.motion = u;
  std::vector<char> flagged(g.K, 0), rejected(g.K, 0);

#pragma omp parallel for schedule(dynamic)
  for (int k = 0; k < g.K; ++k) {
    auto uk = res.motion.slice(k);
    auto slice_energy = [&](const auto& disp) {
      Eigen::VectorXd pred(n);
      pull_slice(v, g, k, disp, psf, pred);
      return (f.slice(k) - pred).squaredNorm();
    };
    for (int it = 0; it < cfg.gn_iters; ++it) {
      const auto step = gauss_newton_step(f, v, grad, res.motion, k, basis);
      if (!step) {
        flagged[k] = 1;
        break;
      }
      Eigen::MatrixX3d dir = Eigen::Map<const Eigen::MatrixX3d>(step->data(), n, 3);
      const double largest = dir.cwiseAbs().maxCoeff();
      if (largest == 0.0) break;
      if (largest > cfg.step_max) dir *= cfg.step_max / largest;

      const double e0 = slice_energy(uk);
      double scale = 1.0;
      bool accepted = false;
      for (int t = 0; t <= cfg.max_backtracks; ++t, scale *= cfg.armijo) {
        const Eigen::MatrixX3d trial = uk + scale * dir;
        if (slice_energy(trial) <= e0) {
          uk = trial;
          accepted = true;
          break;
        }
      }
      if (!accepted) {
        rejected[k] = 1;
        break;
      }
    }
  }
  for (int k = 0; k < g.K; ++k) {
    if (flagged[k]) res.flagged_slices.push_back(k);
    res.rejected_steps += rejected[k];
  }
  return res;
}

namespace {

Volume mean_of(const std::vector<Volume>& vols, const std::vector<int>& which) {
  Volume out(vols[which.front()].dims, vols[which.front()].spacing);
  for (const int i : which) out.data += vols[i].data;
  out.data /= double(which.size());
  return out;
}

}  // namespace

ReconResult reconstruct(const std::vector<SliceStack>& stacks, const Dims& dims,
                        const ReconConfig& cfg, const std::vector<MotionStack>* truth) {
  cfg.validate();
  const int S = int(stacks.size());
  require(S >= 1 && S <= 3, ErrorCode::InvalidArgument, "reconstruct: expects 1 to 3 stacks");
  for (const auto& f : stacks) {
    require(f.valid(), ErrorCode::InvalidArgument, "reconstruct: invalid stack payload");
    require(f.geometry.fits(dims), ErrorCode::GeometryMismatch,
            "reconstruct: stack " + f.geometry.describe() + " does not fit grid " +
                dims_string(dims));
  }
  if (truth)
    require(int(truth->size()) == S, ErrorCode::GeometryMismatch,
            "reconstruct: truth motion count differs from stack count");

  const std::vector<Dims> level_dims = pyramid_dims(dims, cfg.levels);
  const int L = cfg.levels;
  // pyr[l][s]
  std::vector<std::vector<SliceStack>> pyr(L);
  std::vector<std::vector<MotionStack>> truth_pyr(L);
  pyr[0] = stacks;
  if (truth) truth_pyr[0] = *truth;
  for (int l = 1; l < L; ++l)
    for (int s = 0; s < S; ++s) {
      pyr[l].push_back(downsample2(pyr[l - 1][s]));
      if (truth) truth_pyr[l].push_back(downsample2(truth_pyr[l - 1][s]));
    }

  ReconResult result;
  result.report.single_stack = S == 1;
  SvrState state;
  state.volumes.resize(S);
  state.motions.resize(S);

  for (int l = L - 1; l >= 0; --l) {
    const Dims& d = level_dims[l];
    const std::vector<SliceStack>& f = pyr[l];
    const MotionBasis basis{cfg.basis, grid_center(d)};
    LevelReport rep;
    rep.level = l;
    rep.dims = d;
    state.level = l;

    for (int s = 0; s < S; ++s) {
      require(f[s].geometry.fits(d), ErrorCode::GeometryMismatch,
              "reconstruct: pyramid level " + std::to_string(l) + " stack " +
                  f[s].geometry.describe() + " does not fit " + dims_string(d));
      state.motions[s] = l == L - 1 ? MotionStack(f[s].geometry)
                                    : basis.project(upsample2(state.motions[s], f[s].geometry));
      const SplatVolume splat =
          splat_push(f[s], state.motions[s], Psf::boxcar(f[s].geometry.slab), d);
      state.volumes[s] = normalize_splat(splat, hole_threshold(splat, cfg.hole_eps)).first;
    }

    double J = objective(state, f, cfg);
    rep.objective.push_back(J);
    auto volume_step = [&](int s) {
      const std::vector<int> partners = coupling_partners(s, S);
      const Volume vbar = partners.empty() ? state.volumes[s] : mean_of(state.volumes, partners);
      VUpdateResult vr =
          v_update(f[s], state.motions[s], vbar, int(partners.size()), cfg, &state.volumes[s]);
      rep.cg_residuals.push_back(vr.relative_residual);
      Volume previous = std::move(state.volumes[s]);
      state.volumes[s] = std::move(vr.volume);
      const double next = objective(state, f, cfg);
      if (next <= J) {
        J = next;
        rep.objective.push_back(J);
      } else {
        state.volumes[s] = std::move(previous);
        ++rep.rejected_v_steps;
      }
    };
    // Volumes settle before motion moves.
    for (int sweep = 0; sweep < cfg.v_warmup; ++sweep)
      for (int s = 0; s < S; ++s) volume_step(s);
    for (int sweep = 0; sweep < cfg.outer_iters; ++sweep) {
      for (int s = 0; s < S; ++s) {
        volume_step(s);

        double next;
        UUpdateResult ur = u_update(f[s], state.volumes[s], state.motions[s], basis, cfg);
        rep.flagged_slices += int(ur.flagged_slices.size());
        rep.rejected_u_steps += ur.rejected_steps;
        MotionStack prior = std::move(state.motions[s]);
        state.motions[s] = std::move(ur.motion);
        next = objective(state, f, cfg);
        if (next <= J) {
          J = next;
          rep.objective.push_back(J);
        } else {
          state.motions[s] = std::move(prior);
          ++rep.rejected_u_steps;
        }
      }
    }
    state.objective_history.insert(state.objective_history.end(), rep.objective.begin(),
                                   rep.objective.end());
    if (truth) {
      std::vector<Mask> masks;
      for (const SliceStack& fs : f) masks.push_back(foreground_mask(fs));
      rep.epe_compensated =
          pooled_epe(state.motions, truth_pyr[l], true, masks) * std::ldexp(1.0, l);
    }
    result.report.levels.push_back(std::move(rep));
  }

  SplatVolume fused{Volume(dims), Volume(dims)};
  for (int s = 0; s < S; ++s) {
    const SplatVolume part =
        splat_push(stacks[s], state.motions[s], Psf::boxcar(stacks[s].geometry.slab), dims);
    fused.values.data += part.values.data;
    fused.weights.data += part.weights.data;
  }
  auto [volume, holes] = normalize_splat(fused, hole_threshold(fused, cfg.hole_eps));
  result.fused = std::move(volume);
  result.fused_weights = fused.weights;
  result.holes = std::move(holes);
  result.report.hole_voxels = result.holes.count();
  result.report.total_voxels = result.holes.size();
  result.motions = std::move(state.motions);
  std::vector<int> all(S);
  for (int s = 0; s < S; ++s) all[s] = s;
  result.consensus = mean_of(state.volumes, all);
  result.volumes = std::move(state.volumes);
  return result;
}

}  // namespace svr
