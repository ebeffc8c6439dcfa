/*
 * surfreg: elastic shape registration of simple surfaces in 3D space
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

#include "surfreg/shape_field.hpp"

#include <Eigen/Dense>

#include <stdexcept>

namespace surfreg {

/// A proper rotation: orthogonal with determinant +1, both within 1e-10.
class Rotation3 {
 public:
  Rotation3() : m_(Mat3::Identity()) {}

  static Rotation3 from_matrix(const Mat3& m) {
    if ((m.transpose() * m - Mat3::Identity()).cwiseAbs().maxCoeff() > 1e-10)
      throw std::invalid_argument("Rotation3: matrix is not orthogonal");
    if (std::abs(m.determinant() - 1.0) > 1e-10)
      throw std::invalid_argument("Rotation3: determinant is not +1");
    Rotation3 r;
    r.m_ = m;
    return r;
  }

  static Rotation3 identity() { return Rotation3(); }

  const Mat3& matrix() const { return m_; }

 private:
  Mat3 m_;
};

struct RotationEstimate {
  Rotation3 rotation;
  /// Set when the cross-covariance is rank-deficient with the reflection
  /// branch active, so the optimum is not unique; the SVD order provides a
  /// deterministic tie-break.
  bool ambiguous = false;
};

/// Rotation R minimizing || R q_source - q_target ||^2 over SO(3)
/// (Kabsch-Umeyama): SVD of the quadrature-weighted cross-covariance
/// C = sum w q_target q_source^T, with the determinant-sign correction on
/// the smallest singular direction.
inline RotationEstimate optimal_rotation(const ShapeField& q_target, const ShapeField& q_source) {
  if (!q_target.partition.same_as(q_source.partition))
    throw std::invalid_argument("optimal_rotation: fields use different partitions");
  const QuadratureWeights w = QuadratureWeights::make(q_target.partition);

  Mat3 cov = Mat3::Zero();
  for (std::size_t j = 0; j < q_target.partition.n(); ++j) {
    Mat3 row = Mat3::Zero();
    for (std::size_t i = 0; i < q_target.partition.m(); ++i)
      row += w.wr[i] * (q_target.q(i, j) * q_source.q(i, j).transpose());
    cov += w.wt[j] * row;
  }

  Eigen::JacobiSVD<Mat3> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const double sign = (svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0 ? -1.0 : 1.0;
  Mat3 rot = svd.matrixU() * Eigen::DiagonalMatrix<double, 3>(1.0, 1.0, sign) *
             svd.matrixV().transpose();

  RotationEstimate out;
  const auto& sv = svd.singularValues();
  out.ambiguous = sign < 0.0 && std::abs(sv[1] - sv[2]) <= 1e-12;
  out.rotation = Rotation3::from_matrix(rot);
  return out;
}

}  // namespace surfreg
