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

#include "surfreg/basis.hpp"
#include "surfreg/shape_field.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace surfreg {

/// Gradient of the registration energy over the truncated basis: one
/// coefficient per element plus the combined field sampled on the grid.
/// The basis is L2-orthonormal, so norm = sqrt(sum of squared coefficients).
struct GradientField {
  std::vector<double> coefficients;
  Grid<Vec2> sampled;
  double norm = 0.0;
};

/// Largest step sizes keeping the updated map diffeomorphic: delta_min from
/// positivity of det(I - delta A) over the grid, delta_hat_min from
/// positivity of the two diagonal minors 1 - delta a11 and 1 - delta a22
/// (the remaining principal minors needed for injectivity on a rectangle).
struct SafeStepBounds {
  double delta_min = std::numeric_limits<double>::infinity();
  double delta_hat_min = std::numeric_limits<double>::infinity();
};

/// One accepted (or rejected) descent step.
struct StepReport {
  double delta = 0.0;
  double delta_min = 0.0;
  double delta_hat_min = 0.0;
  double grad_norm = 0.0;
  double energy_before = 0.0;
  double energy_after = 0.0;
  int halvings = 0;
  bool accepted = false;
};

namespace detail {

/// Scalar fields shared by every directional derivative at one iterate:
/// pr = <e, dq~2/dr>, pt = <e, dq~2/dt>, pq = <e, q~2>, with e the residual
/// q1_rot - q~2 and the partials taken by the standard stencils.
struct DerivativeKernel {
  Grid<double> pr, pt, pq;
  QuadratureWeights w;
};

inline DerivativeKernel make_derivative_kernel(const ShapeField& q1_rot,
                                               const ShapeField& q2_tilde) {
  if (!q1_rot.partition.same_as(q2_tilde.partition))
    throw std::invalid_argument("directional derivative: fields use different partitions");
  const GridPartition& p = q1_rot.partition;
  auto [qr, qt] = finite_difference_partials(q2_tilde.q, p);
  DerivativeKernel k{Grid<double>(p.m(), p.n()), Grid<double>(p.m(), p.n()),
                     Grid<double>(p.m(), p.n()), QuadratureWeights::make(p)};
  for (std::size_t flat = 0; flat < k.pq.size(); ++flat) {
    const Vec3 e = q1_rot.q[flat] - q2_tilde.q[flat];
    k.pr[flat] = e.dot(qr[flat]);
    k.pt[flat] = e.dot(qt[flat]);
    k.pq[flat] = e.dot(q2_tilde.q[flat]);
  }
  return k;
}

}  // namespace detail

/// First variation of the registration energy along an arbitrary sampled
/// tangent field, with the divergence taken by the stencils (the derivative
/// of the discrete energy itself).
inline double directional_derivative(const ShapeField& q1_rot, const ShapeField& q2_tilde,
                                     const TangentField& v) {
  const detail::DerivativeKernel k = detail::make_derivative_kernel(q1_rot, q2_tilde);
  const GridPartition& p = q1_rot.partition;
  if (!v.partition.same_as(p))
    throw std::invalid_argument("directional_derivative: tangent field uses a different partition");
  auto [vr, vt] = finite_difference_partials(v.v, p);
  double sum = 0.0;
  for (std::size_t j = 0; j < p.n(); ++j) {
    double row = 0.0;
    for (std::size_t i = 0; i < p.m(); ++i) {
      const double div = vr(i, j)[0] + vt(i, j)[1];
      row += k.w.wr[i] *
             (k.pr(i, j) * v.v(i, j)[0] + k.pt(i, j) * v.v(i, j)[1] + 0.5 * div * k.pq(i, j));
    }
    sum += k.w.wt[j] * row;
  }
  return -2.0 * sum;
}

/// All basis coefficients of the gradient at the current iterate, plus the
/// combined sampled field.
inline GradientField assemble_gradient(const ShapeField& q1_rot, const ShapeField& q2_tilde,
                                       const SampledBasis& basis) {
  const GridPartition& p = basis.partition();
  if (!q1_rot.partition.same_as(p))
    throw std::invalid_argument("assemble_gradient: basis sampled on a different partition");
  const detail::DerivativeKernel k = detail::make_derivative_kernel(q1_rot, q2_tilde);

  GradientField g;
  g.coefficients.resize(basis.size());
  g.sampled = Grid<Vec2>(p.m(), p.n(), Vec2::Zero());

  double norm_sq = 0.0;
  for (std::size_t a = 0; a < basis.size(); ++a) {
    const Grid<double>& val = basis.value(a);
    const Grid<double>& div = basis.stencil_divergence(a);
    const Grid<double>& pslot = (basis.element(a).slot == Slot::R) ? k.pr : k.pt;
    double sum = 0.0;
    for (std::size_t j = 0; j < p.n(); ++j) {
      double row = 0.0;
      for (std::size_t i = 0; i < p.m(); ++i)
        row += k.w.wr[i] * (pslot(i, j) * val(i, j) + 0.5 * div(i, j) * k.pq(i, j));
      sum += k.w.wt[j] * row;
    }
    const double c = -2.0 * sum;
    g.coefficients[a] = c;
    norm_sq += c * c;
    const int comp = (basis.element(a).slot == Slot::R) ? 0 : 1;
    for (std::size_t flat = 0; flat < g.sampled.size(); ++flat)
      g.sampled[flat][comp] += c * val[flat];
  }
  g.norm = std::sqrt(norm_sq);
  return g;
}

/// Per-node largest safe step sizes, minimized over the grid. With
/// A = stencil Jacobian of the sampled gradient, a = det A, b = -tr A, the
/// determinant of the stepped map is the quadratic 1 + b delta + a delta^2;
/// its first positive root bounds delta. Near-singular a (|a| <= 1e-12)
/// degenerates to -1/b when b < 0 and to infinity otherwise.
inline SafeStepBounds max_safe_step(const GradientField& g, const GridPartition& p) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  auto [dr, dt] = finite_difference_partials(g.sampled, p);
  SafeStepBounds out;
  for (std::size_t flat = 0; flat < g.sampled.size(); ++flat) {
    const double a11 = dr[flat][0], a12 = dt[flat][0];
    const double a21 = dr[flat][1], a22 = dt[flat][1];
    const double a = a11 * a22 - a12 * a21;
    const double b = -(a11 + a22);

    double delta = inf;
    if (std::abs(a) <= 1e-12) {
      if (b < 0.0) delta = -1.0 / b;
    } else {
      const double disc = b * b - 4.0 * a;
      if (disc >= 0.0) {
        const double root = (-b - std::sqrt(disc)) / (2.0 * a);
        if (root > 0.0) delta = root;
      }
    }
    out.delta_min = std::min(out.delta_min, delta);

    double delta_hat = inf;
    if (a11 > 0.0 && a22 > 0.0)
      delta_hat = std::min(1.0 / a11, 1.0 / a22);
    else if (a11 > 0.0)
      delta_hat = 1.0 / a11;
    else if (a22 > 0.0)
      delta_hat = 1.0 / a22;
    out.delta_hat_min = std::min(out.delta_hat_min, delta_hat);
  }
  return out;
}

/// h(node) = node - delta * gradient(node). Boundary nodes stay fixed
/// because every basis element vanishes on its constrained edges. The
/// resulting map is re-verified: any non-positive node Jacobian or node
/// mapped outside the domain means the step bound was not honored.
inline DiffeoField apply_step(const GradientField& g, const GridPartition& p, double delta) {
  DiffeoField h;
  h.partition = p;
  h.h = Grid<Vec2>(p.m(), p.n());
  for (std::size_t j = 0; j < p.n(); ++j)
    for (std::size_t i = 0; i < p.m(); ++i)
      h.h(i, j) = Vec2(p.r_knots[i], p.t_knots[j]) - delta * g.sampled(i, j);

  for (std::size_t flat = 0; flat < h.h.size(); ++flat) {
    for (int c = 0; c < 2; ++c) {
      double& x = h.h[flat][c];
      if (x < -1e-12 || x > 1.0 + 1e-12)
        throw std::runtime_error("apply_step: step safety violated (node mapped outside domain)");
      x = std::clamp(x, 0.0, 1.0);
    }
  }
  const Grid<Mat2> jac = diffeo_jacobian(h);
  for (std::size_t flat = 0; flat < jac.size(); ++flat)
    if (!(jac[flat].determinant() > 0.0))
      throw std::runtime_error("apply_step: step safety violated (non-positive Jacobian determinant)");
  return h;
}

/// Grid-sampled composition h_outer . h_inner via bilinear interpolation of
/// the outer map at the inner map's node images. Corner and edge structure
/// is preserved exactly; Jacobian positivity is re-verified.
inline DiffeoField compose(const DiffeoField& h_outer, const DiffeoField& h_inner) {
  if (!h_outer.partition.same_as(h_inner.partition))
    throw std::invalid_argument("compose: diffeomorphisms use different partitions");
  const GridPartition& p = h_outer.partition;
  DiffeoField out;
  out.partition = p;
  out.h = Grid<Vec2>(p.m(), p.n());
  for (std::size_t j = 0; j < p.n(); ++j)
    for (std::size_t i = 0; i < p.m(); ++i) {
      const Vec2& at = h_inner.h(i, j);
      out.h(i, j) = bilinear_sample(h_outer.h, p, at[0], at[1]);
    }
  const Grid<Mat2> jac = diffeo_jacobian(out);
  for (std::size_t j = 0; j < p.n(); ++j)
    for (std::size_t i = 0; i < p.m(); ++i)
      if (!(jac(i, j).determinant() > 0.0))
        throw std::runtime_error("compose: non-positive Jacobian determinant at node " +
                                 std::to_string(i) + "," + std::to_string(j));
  return out;
}

}  // namespace surfreg
