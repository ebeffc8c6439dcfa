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

#include <cstddef>
#include <numbers>
#include <vector>

namespace surfreg {

/// Which coordinate of the tangent vector field carries the scalar family.
enum class Slot { R, T };

/// The three trigonometric families spanning the scalar space that vanishes
/// at x = 0 and x = 1:
///   Sin     sqrt(2) sin(pi k x)
///   SinCos  2 sin(pi k x) cos(2 pi l y)
///   SinSin  2 sin(pi k x) sin(2 pi l y)
/// where x is the slot's own variable and y the other one.
enum class TrigFamily { Sin, SinCos, SinSin };

namespace detail {

// Endpoint values are snapped so sampled elements satisfy the tangent-space
// boundary conditions bit-exactly.
inline double sin_pi_k(double x, int k) {
  if (x == 0.0 || x == 1.0) return 0.0;
  return std::sin(std::numbers::pi * k * x);
}
inline double cos_2pi_l(double y, int l) {
  if (y == 0.0 || y == 1.0) return 1.0;
  return std::cos(2.0 * std::numbers::pi * l * y);
}
inline double sin_2pi_l(double y, int l) {
  if (y == 0.0 || y == 1.0) return 0.0;
  return std::sin(2.0 * std::numbers::pi * l * y);
}

}  // namespace detail

/// One element of the orthonormal L2 basis of the tangent space at the
/// identity of the reparametrization group.
struct BasisElement {
  Slot slot = Slot::R;
  TrigFamily family = TrigFamily::Sin;
  int k = 1;
  int l = 1;  // unused for the Sin family

  /// Scalar family value with x the slot's own variable, y the other.
  double scalar(double x, double y) const {
    switch (family) {
      case TrigFamily::Sin:
        return std::numbers::sqrt2 * detail::sin_pi_k(x, k);
      case TrigFamily::SinCos:
        return 2.0 * detail::sin_pi_k(x, k) * detail::cos_2pi_l(y, l);
      case TrigFamily::SinSin:
      default:
        return 2.0 * detail::sin_pi_k(x, k) * detail::sin_2pi_l(y, l);
    }
  }

  /// Analytic derivative of the scalar with respect to its own variable.
  double scalar_dx(double x, double y) const {
    constexpr double pi = std::numbers::pi;
    switch (family) {
      case TrigFamily::Sin:
        return std::numbers::sqrt2 * pi * k * std::cos(pi * k * x);
      case TrigFamily::SinCos:
        return 2.0 * pi * k * std::cos(pi * k * x) * detail::cos_2pi_l(y, l);
      case TrigFamily::SinSin:
      default:
        return 2.0 * pi * k * std::cos(pi * k * x) * detail::sin_2pi_l(y, l);
    }
  }

  Vec2 evaluate(double r, double t) const {
    if (slot == Slot::R) return Vec2(scalar(r, t), 0.0);
    return Vec2(0.0, scalar(t, r));
  }

  /// Closed-form divergence: the own-variable derivative of the slot
  /// coordinate (the other coordinate is identically zero).
  double divergence(double r, double t) const {
    if (slot == Slot::R) return scalar_dx(r, t);
    return scalar_dx(t, r);
  }
};

/// The truncated basis: 2 (KL + 2 KL^2) elements in a fixed deterministic
/// order: all r-slot elements first, then all t-slot elements; within a
/// slot the Sin family (k = 1..KL), then SinCos (k outer, l inner), then
/// SinSin in the same order.
inline std::vector<BasisElement> build_basis(int kl) {
  if (kl < 1) throw std::invalid_argument("build_basis: KL must be at least 1");
  std::vector<BasisElement> out;
  out.reserve(2 * (kl + 2 * kl * kl));
  for (Slot slot : {Slot::R, Slot::T}) {
    for (int k = 1; k <= kl; ++k) out.push_back({slot, TrigFamily::Sin, k, 1});
    for (TrigFamily fam : {TrigFamily::SinCos, TrigFamily::SinSin})
      for (int k = 1; k <= kl; ++k)
        for (int l = 1; l <= kl; ++l) out.push_back({slot, fam, k, l});
  }
  return out;
}

/// Grid samples of a tangent vector field at the identity: v1 vanishes on
/// the vertical edges, v2 on the horizontal ones.
struct TangentField {
  GridPartition partition;
  Grid<Vec2> v;
};

inline TangentField sample_tangent(const BasisElement& e, const GridPartition& p) {
  TangentField f;
  f.partition = p;
  f.v = Grid<Vec2>(p.m(), p.n());
  for (std::size_t j = 0; j < p.n(); ++j)
    for (std::size_t i = 0; i < p.m(); ++i) f.v(i, j) = e.evaluate(p.r_knots[i], p.t_knots[j]);
  return f;
}

/// Immutable cache of every basis element sampled on a working grid, plus
/// the stencil divergence of each sampled element (the derivative the
/// discrete energy actually responds to). Safe to share across threads.
class SampledBasis {
 public:
  SampledBasis(const GridPartition& p, int kl) : partition_(p), elements_(build_basis(kl)) {
    values_.reserve(elements_.size());
    div_fd_.reserve(elements_.size());
    for (const BasisElement& e : elements_) {
      Grid<double> val(p.m(), p.n());
      for (std::size_t j = 0; j < p.n(); ++j)
        for (std::size_t i = 0; i < p.m(); ++i) {
          const double r = p.r_knots[i], t = p.t_knots[j];
          val(i, j) = (e.slot == Slot::R) ? e.scalar(r, t) : e.scalar(t, r);
        }
      div_fd_.push_back(own_variable_derivative(val, p, e.slot));
      values_.push_back(std::move(val));
    }
  }

  std::size_t size() const { return elements_.size(); }
  const GridPartition& partition() const { return partition_; }
  const BasisElement& element(std::size_t a) const { return elements_[a]; }
  const std::vector<BasisElement>& elements() const { return elements_; }

  /// Scalar samples of element a (its slot coordinate).
  const Grid<double>& value(std::size_t a) const { return values_[a]; }

  /// Stencil divergence of element a on the working grid.
  const Grid<double>& stencil_divergence(std::size_t a) const { return div_fd_[a]; }

 private:
  static Grid<double> own_variable_derivative(const Grid<double>& val, const GridPartition& p,
                                              Slot slot) {
    auto [dr, dt] = finite_difference_partials(val, p);
    return (slot == Slot::R) ? std::move(dr) : std::move(dt);
  }

  GridPartition partition_;
  std::vector<BasisElement> elements_;
  std::vector<Grid<double>> values_;
  std::vector<Grid<double>> div_fd_;
};

}  // namespace surfreg
