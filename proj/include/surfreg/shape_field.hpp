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

#include "surfreg/grid.hpp"
#include "surfreg/surface.hpp"

#include <Eigen/Geometry>

#include <cmath>
#include <stdexcept>
#include <string>

namespace surfreg {

/// Square-root normal field q of a sampled surface: one 3-vector per node.
struct ShapeField {
  GridPartition partition;
  Grid<Vec3> q;
};

/// Grid samples of a diffeomorphism h: D -> D. Valid fields keep the edge
/// structure (h1 = 0/1 on the vertical edges, h2 = 0/1 on the horizontal
/// edges) and have positive discrete Jacobian determinant at every node.
struct DiffeoField {
  GridPartition partition;
  Grid<Vec2> h;
};

inline DiffeoField identity_diffeo(const GridPartition& p) {
  DiffeoField d;
  d.partition = p;
  d.h = Grid<Vec2>(p.m(), p.n());
  for (std::size_t j = 0; j < p.n(); ++j)
    for (std::size_t i = 0; i < p.m(); ++i) d.h(i, j) = Vec2(p.r_knots[i], p.t_knots[j]);
  return d;
}

/// h(r,t) = (r^a, t^b) for a,b > 0; exponent 1 leaves the coordinate
/// bit-exact.
inline DiffeoField power_diffeo(const GridPartition& p, double a, double b) {
  if (!(a > 0.0) || !(b > 0.0)) throw std::invalid_argument("power_diffeo: exponents must be positive");
  auto pw = [](double x, double e) { return e == 1.0 ? x : std::pow(x, e); };
  DiffeoField d;
  d.partition = p;
  d.h = Grid<Vec2>(p.m(), p.n());
  for (std::size_t j = 0; j < p.n(); ++j)
    for (std::size_t i = 0; i < p.m(); ++i)
      d.h(i, j) = Vec2(pw(p.r_knots[i], a), pw(p.t_knots[j], b));
  return d;
}

/// 2x2 finite-difference Jacobian matrices of a diffeomorphism field.
inline Grid<Mat2> diffeo_jacobian(const DiffeoField& d) {
  auto [dr, dt] = finite_difference_partials(d.h, d.partition);
  Grid<Mat2> jac(d.partition.m(), d.partition.n());
  for (std::size_t flat = 0; flat < jac.size(); ++flat) {
    Mat2 a;
    a(0, 0) = dr[flat][0];
    a(0, 1) = dt[flat][0];
    a(1, 0) = dr[flat][1];
    a(1, 1) = dt[flat][1];
    jac[flat] = a;
  }
  return jac;
}

struct DiffeoDiagnostics {
  double max_boundary_error = 0.0;  // worst deviation of edge values from the edge structure
  double min_det = std::numeric_limits<double>::infinity();
  double min_diag_minor = std::numeric_limits<double>::infinity();  // min of dh1/dr and dh2/dt
};

inline DiffeoDiagnostics diffeo_diagnostics(const DiffeoField& d) {
  DiffeoDiagnostics out;
  const std::size_t m = d.partition.m(), n = d.partition.n();
  for (std::size_t j = 0; j < n; ++j) {
    out.max_boundary_error = std::max(out.max_boundary_error, std::abs(d.h(0, j)[0] - 0.0));
    out.max_boundary_error = std::max(out.max_boundary_error, std::abs(d.h(m - 1, j)[0] - 1.0));
  }
  for (std::size_t i = 0; i < m; ++i) {
    out.max_boundary_error = std::max(out.max_boundary_error, std::abs(d.h(i, 0)[1] - 0.0));
    out.max_boundary_error = std::max(out.max_boundary_error, std::abs(d.h(i, n - 1)[1] - 1.0));
  }
  const Grid<Mat2> jac = diffeo_jacobian(d);
  for (std::size_t flat = 0; flat < jac.size(); ++flat) {
    out.min_det = std::min(out.min_det, jac[flat].determinant());
    out.min_diag_minor = std::min({out.min_diag_minor, jac[flat](0, 0), jac[flat](1, 1)});
  }
  return out;
}

/// q = n / sqrt(||n||) with n the cross product of the finite-difference
/// partials; the zero vector where the normal degenerates.
inline ShapeField compute_shape_field(const SurfaceSample& s) {
  auto [cu, cv] = finite_difference_partials(s.points, s.partition);
  ShapeField f;
  f.partition = s.partition;
  f.q = Grid<Vec3>(s.partition.m(), s.partition.n());
  for (std::size_t flat = 0; flat < f.q.size(); ++flat) {
    const Vec3 normal = cu[flat].cross(cv[flat]);
    const double len = normal.norm();
    f.q[flat] = (len < 1e-14) ? Vec3::Zero() : Vec3(normal / std::sqrt(len));
  }
  return f;
}

inline ShapeField rotate(const ShapeField& f, const Mat3& rot) {
  ShapeField out;
  out.partition = f.partition;
  out.q = Grid<Vec3>(f.partition.m(), f.partition.n());
  for (std::size_t flat = 0; flat < f.q.size(); ++flat) out.q[flat] = rot * f.q[flat];
  return out;
}

/// Action of a reparametrization on a shape field:
/// (q,h)(node) = q(h(node)) * sqrt(det Jh(node)), with the Jacobian taken by
/// the standard stencils. Determinants in [-1e-6, 0) are clamped to zero
/// (boundary roundoff); anything more negative is an orientation error.
inline ShapeField group_action(const ShapeField& q, const DiffeoField& h) {
  if (!q.partition.same_as(h.partition))
    throw std::invalid_argument("group_action: shape field and diffeomorphism use different partitions");
  const Grid<Mat2> jac = diffeo_jacobian(h);
  ShapeField out;
  out.partition = q.partition;
  out.q = Grid<Vec3>(q.partition.m(), q.partition.n());
  for (std::size_t j = 0; j < q.partition.n(); ++j) {
    for (std::size_t i = 0; i < q.partition.m(); ++i) {
      double det = jac(i, j).determinant();
      if (det < 0.0) {
        if (det < -1e-6)
          throw std::runtime_error("group_action: orientation violated (Jacobian determinant " +
                                   std::to_string(det) + " at node " + std::to_string(i) + "," +
                                   std::to_string(j) + ")");
        det = 0.0;
      }
      const Vec2& at = h.h(i, j);
      out.q(i, j) = std::sqrt(det) * bilinear_sample(q.q, q.partition, at[0], at[1]);
    }
  }
  return out;
}

inline double l2_inner(const ShapeField& a, const ShapeField& b) {
  if (!a.partition.same_as(b.partition))
    throw std::invalid_argument("l2_inner: fields use different partitions");
  const QuadratureWeights w = QuadratureWeights::make(a.partition);
  double sum = 0.0;
  for (std::size_t j = 0; j < a.partition.n(); ++j) {
    double row = 0.0;
    for (std::size_t i = 0; i < a.partition.m(); ++i) row += w.wr[i] * a.q(i, j).dot(b.q(i, j));
    sum += w.wt[j] * row;
  }
  return sum;
}

inline double l2_norm_sq(const ShapeField& a) { return l2_inner(a, a); }

inline double l2_distance(const ShapeField& a, const ShapeField& b) {
  if (!a.partition.same_as(b.partition))
    throw std::invalid_argument("l2_distance: fields use different partitions");
  const QuadratureWeights w = QuadratureWeights::make(a.partition);
  double sum = 0.0;
  for (std::size_t j = 0; j < a.partition.n(); ++j) {
    double row = 0.0;
    for (std::size_t i = 0; i < a.partition.m(); ++i)
      row += w.wr[i] * (a.q(i, j) - b.q(i, j)).squaredNorm();
    sum += w.wt[j] * row;
  }
  return std::sqrt(sum);
}

/// E(h,R) = || R q1 - (q2,h) ||^2 in the quadrature L2 norm.
inline double registration_energy(const ShapeField& q1, const ShapeField& q2, const Mat3& rot,
                                  const DiffeoField& h) {
  const ShapeField warped = group_action(q2, h);
  const QuadratureWeights w = QuadratureWeights::make(q1.partition);
  double sum = 0.0;
  for (std::size_t j = 0; j < q1.partition.n(); ++j) {
    double row = 0.0;
    for (std::size_t i = 0; i < q1.partition.m(); ++i)
      row += w.wr[i] * (rot * q1.q(i, j) - warped.q(i, j)).squaredNorm();
    sum += w.wt[j] * row;
  }
  return sum;
}

}  // namespace surfreg
