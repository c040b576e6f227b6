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

#include "svrkit/rigid.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <iostream>

namespace svr {

bool RigidTransform::is_rotation(double tol) const {
  const double orth = (R.transpose() * R - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
  return orth < tol && std::abs(R.determinant() - 1.0) < tol;
}

PointCloud motion_rows(const MotionStack& u) {
  const StackGeometry& g = u.geometry;
  const auto n = g.pixels_per_slice();
  PointCloud rows(g.pixel_count(), 3);
  for (int k = 0; k < g.K; ++k) rows.middleRows(n * k, n) = u.slice(k);
  return rows;
}

PointCloud motion_points(const MotionStack& u) {
  return motion_rows(u) + slice_coordinates(u.geometry);
}

namespace {

void check_pair(const PointCloud& u, const PointCloud& v, const Mask& mask, const char* what) {
  require(u.rows() == v.rows(), ErrorCode::GeometryMismatch,
          std::string(what) + ": point counts differ");
  require(mask.size() == 0 || mask.size() == u.rows(), ErrorCode::GeometryMismatch,
          std::string(what) + ": mask length does not match point count");
}

PointCloud masked_rows(const PointCloud& pts, const Mask& mask) {
  if (mask.size() == 0) return pts;
  PointCloud out(mask.count(), 3);
  Eigen::Index n = 0;
  for (Eigen::Index i = 0; i < pts.rows(); ++i)
    if (mask[i]) out.row(n++) = pts.row(i);
  return out;
}

}  // namespace

AffineFit fit_affine(const PointCloud& u, const PointCloud& v, const Mask& mask) {
  check_pair(u, v, mask, "fit_affine");
  const PointCloud U = masked_rows(u, mask);
  const PointCloud V = masked_rows(v, mask);
  require(U.rows() >= 4, ErrorCode::DegenerateFit, "fit_affine: fewer than 4 masked points");

  const Eigen::RowVector3d u_mean = U.colwise().mean();
  const Eigen::RowVector3d v_mean = V.colwise().mean();
  const PointCloud Uc = U.rowwise() - u_mean;
  const PointCloud Vc = V.rowwise() - v_mean;
  // Normal equations of the centred system; the offset decouples exactly.
  const Eigen::Matrix3d gram = Vc.transpose() * Vc;
  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(gram, Eigen::EigenvaluesOnly);
  const double hi = eig.eigenvalues().maxCoeff();
  const double lo = eig.eigenvalues().minCoeff();
  require(hi > 0 && lo > 1e-10 * hi, ErrorCode::DegenerateFit,
          "fit_affine: masked points are coplanar or collinear");

  AffineFit fit;
  fit.A = gram.ldlt().solve(Vc.transpose() * Uc);
  fit.b = u_mean - v_mean * fit.A;
  return fit;
}

AffineFit fit_affine(const MotionStack& u, const MotionStack& v, const Mask& mask) {
  require(u.geometry == v.geometry, ErrorCode::GeometryMismatch,
          "fit_affine: " + u.geometry.describe() + " vs " + v.geometry.describe());
  return fit_affine(motion_points(u), motion_points(v), mask);
}

PolarFactors polar_decompose(const Eigen::Matrix3d& Rp) {
  require(Rp.allFinite(), ErrorCode::InvalidArgument, "polar_decompose: non-finite input");
  const Eigen::JacobiSVD<Eigen::Matrix3d> svd(Rp, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::Matrix3d& U = svd.matrixU();
  const Eigen::Matrix3d& V = svd.matrixV();
  Eigen::Vector3d d(1.0, 1.0, (U * V.transpose()).determinant() < 0 ? -1.0 : 1.0);

  PolarFactors out;
  out.singular_values = svd.singularValues();
  out.rotation = U * d.asDiagonal() * V.transpose();
  out.stretch = V * (d.array() * out.singular_values.array()).matrix().asDiagonal() *
                V.transpose();
  out.stretch = 0.5 * (out.stretch + out.stretch.transpose()).eval();
  const double smax = out.singular_values[0];
  out.ill_conditioned = !(out.singular_values[2] > 1e-12 * std::max(smax, 1e-300));
  return out;
}

CompensatedLoss compensated_loss(const PointCloud& u, const PointCloud& v, const Mask& mask) {
  check_pair(u, v, mask, "compensated_loss");
  const AffineFit fit = fit_affine(u, v, mask);
  const PolarFactors polar = polar_decompose(fit.A);
  if (polar.ill_conditioned)
    std::cerr << "warning: compensated_loss: affine fit is ill-conditioned\n";

  const PointCloud U = masked_rows(u, mask);
  const PointCloud V = masked_rows(v, mask);
  CompensatedLoss out;
  out.rigid.R = polar.rotation;
  out.rigid.t = U.colwise().mean() - V.colwise().mean() * polar.rotation;
  out.loss = (U - out.rigid.apply(V)).squaredNorm() / double(U.rows());
  return out;
}

CompensatedLoss compensated_loss(const MotionStack& u, const MotionStack& v, const Mask& mask) {
  require(u.geometry == v.geometry, ErrorCode::GeometryMismatch,
          "compensated_loss: " + u.geometry.describe() + " vs " + v.geometry.describe());
  return compensated_loss(motion_points(u), motion_points(v), mask);
}

MotionStack apply_rigid(const MotionStack& field, const RigidTransform& rigid) {
  const StackGeometry& g = field.geometry;
  const PointCloud p = slice_coordinates(g);
  const PointCloud moved = rigid.apply(motion_rows(field) + p) - p;
  MotionStack out(g);
  const auto n = g.pixels_per_slice();
  for (int k = 0; k < g.K; ++k) out.slice(k) = moved.middleRows(n * k, n);
  return out;
}

}  // namespace svr
