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

#include "surfreg/surface.hpp"

#include <numbers>
#include <stdexcept>
#include <string>

namespace surfreg {

/// The analytic test surfaces. Type 1 and type 2 of each kind differ by the
/// coordinate permutation (x,y,z) -> (y,z,x), i.e. type 1 is the rotation of
/// type 2 by [[0,1,0],[0,0,1],[1,0,0]].
enum class SurfaceKind { Sine1, Sine2, Helicoid1, Helicoid2, CosSin1, CosSin2 };

struct SurfaceSpec {
  SurfaceKind kind = SurfaceKind::Sine1;
  int k = 1;  // frequency parameter; ignored for the cosine-sine kind

  Vec3 point(double r, double t) const {
    constexpr double pi = std::numbers::pi;
    switch (kind) {
      case SurfaceKind::Sine1:
        return {r, t, std::sin(k * pi * r)};
      case SurfaceKind::Sine2:
        return {std::sin(k * pi * r), r, t};
      case SurfaceKind::Helicoid1:
        return {r * std::cos(k * pi * t), r * std::sin(k * pi * t), k * pi * t};
      case SurfaceKind::Helicoid2:
        return {k * pi * t, r * std::cos(k * pi * t), r * std::sin(k * pi * t)};
      case SurfaceKind::CosSin1:
        return {r, t, std::cos(0.5 * pi * r) * std::sin(0.5 * pi * t)};
      case SurfaceKind::CosSin2:
      default:
        return {std::cos(0.5 * pi * r) * std::sin(0.5 * pi * t), r, t};
    }
  }
};

inline SurfaceSample generate(const SurfaceSpec& spec, std::size_t m, std::size_t n) {
  if (spec.k < 1) throw std::invalid_argument("generate: k must be at least 1");
  SurfaceSample s;
  s.partition = GridPartition::uniform(m, n);
  s.points = Grid<Vec3>(m, n);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i < m; ++i)
      s.points(i, j) = spec.point(s.partition.r_knots[i], s.partition.t_knots[j]);
  s.analytic = [spec](double r, double t) { return spec.point(r, t); };
  return s;
}

/// Power-law parameter warp gamma(r,t) = (r^a, t^b); a bijection of the unit
/// square onto itself for positive exponents.
struct GammaSpec {
  double exponent_r = 1.0;
  double exponent_t = 1.0;

  bool is_identity() const { return exponent_r == 1.0 && exponent_t == 1.0; }

  Vec2 operator()(double r, double t) const {
    auto pw = [](double x, double e) { return e == 1.0 ? x : std::pow(x, e); };
    return {pw(r, exponent_r), pw(t, exponent_t)};
  }
};

/// Resample the surface through the warped knots: the output at (r_i, t_j)
/// is the surface evaluated at gamma(r_i, t_j). Generated surfaces are
/// re-evaluated from their closed form; loaded surfaces fall back to
/// bilinear interpolation of the point grid (flagged via
/// `used_interpolation`).
inline SurfaceSample perturb(const SurfaceSample& s, const GammaSpec& g,
                             bool* used_interpolation = nullptr) {
  if (!(g.exponent_r > 0.0) || !(g.exponent_t > 0.0))
    throw std::invalid_argument("perturb: gamma exponents must be positive");
  if (used_interpolation) *used_interpolation = false;

  SurfaceSample out;
  out.partition = s.partition;
  out.points = Grid<Vec3>(s.partition.m(), s.partition.n());

  if (s.analytic) {
    for (std::size_t j = 0; j < s.partition.n(); ++j)
      for (std::size_t i = 0; i < s.partition.m(); ++i) {
        const Vec2 at = g(s.partition.r_knots[i], s.partition.t_knots[j]);
        out.points(i, j) = s.analytic(at[0], at[1]);
      }
    auto base = s.analytic;
    out.analytic = [base, g](double r, double t) {
      const Vec2 at = g(r, t);
      return base(at[0], at[1]);
    };
    return out;
  }

  if (used_interpolation) *used_interpolation = true;
  for (std::size_t j = 0; j < s.partition.n(); ++j)
    for (std::size_t i = 0; i < s.partition.m(); ++i) {
      const Vec2 at = g(s.partition.r_knots[i], s.partition.t_knots[j]);
      out.points(i, j) = bilinear_sample(s.points, s.partition, at[0], at[1]);
    }
  return out;
}

inline SurfaceKind parse_surface_kind(const std::string& name) {
  if (name == "sine1") return SurfaceKind::Sine1;
  if (name == "sine2") return SurfaceKind::Sine2;
  if (name == "helicoid1") return SurfaceKind::Helicoid1;
  if (name == "helicoid2") return SurfaceKind::Helicoid2;
  if (name == "cossin1") return SurfaceKind::CosSin1;
  if (name == "cossin2") return SurfaceKind::CosSin2;
  throw std::invalid_argument("unknown surface kind '" + name + "'");
}

inline std::string surface_kind_name(SurfaceKind kind) {
  switch (kind) {
    case SurfaceKind::Sine1: return "sine1";
    case SurfaceKind::Sine2: return "sine2";
    case SurfaceKind::Helicoid1: return "helicoid1";
    case SurfaceKind::Helicoid2: return "helicoid2";
    case SurfaceKind::CosSin1: return "cossin1";
    case SurfaceKind::CosSin2:
    default: return "cossin2";
  }
}

}  // namespace surfreg
