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

#include "surfreg/gradient.hpp"
#include "surfreg/rotation.hpp"
#include "surfreg/surface_zoo.hpp"
#include "test_helpers.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <numbers>
#include <random>

using namespace surfreg;

namespace {

/// Energy of the perturbed identity h = id + eps * v, evaluated exactly the
/// way the pipeline evaluates energies (group action + quadrature). The
/// central difference of this oracle is what the directional derivative
/// must reproduce.
double energy_at(const ShapeField& q1_rot, const ShapeField& q2_tilde, const TangentField& v,
                 double eps) {
  const GridPartition& p = q1_rot.partition;
  DiffeoField h;
  h.partition = p;
  h.h = Grid<Vec2>(p.m(), p.n());
  for (std::size_t j = 0; j < p.n(); ++j)
    for (std::size_t i = 0; i < p.m(); ++i)
      h.h(i, j) = Vec2(p.r_knots[i], p.t_knots[j]) + eps * v.v(i, j);
  const ShapeField warped = group_action(q2_tilde, h);
  const QuadratureWeights w = QuadratureWeights::make(p);
  double sum = 0.0;
  for (std::size_t j = 0; j < p.n(); ++j)
    for (std::size_t i = 0; i < p.m(); ++i)
      sum += w(i, j) * (q1_rot.q(i, j) - warped.q(i, j)).squaredNorm();
  return sum;
}

double central_difference(const ShapeField& q1_rot, const ShapeField& q2_tilde,
                          const TangentField& v, double eps = 1e-5) {
  return (energy_at(q1_rot, q2_tilde, v, eps) - energy_at(q1_rot, q2_tilde, v, -eps)) / (2.0 * eps);
}

}  // namespace

TEST_CASE("directional derivative vanishes on zero residual and zero direction") {
  const GridPartition p = GridPartition::uniform(21, 21);
  const ShapeField q = testing::random_smooth_field(p, 9);
  const TangentField v = sample_tangent({Slot::R, TrigFamily::Sin, 1, 1}, p);
  CHECK_THAT(directional_derivative(q, q, v), Catch::Matchers::WithinAbs(0.0, 1e-13));

  TangentField zero;
  zero.partition = p;
  zero.v = Grid<Vec2>(p.m(), p.n(), Vec2::Zero());
  const ShapeField q2 = testing::random_smooth_field(p, 10);
  CHECK_THAT(directional_derivative(q, q2, zero), Catch::Matchers::WithinAbs(0.0, 1e-13));
}

TEST_CASE("directional derivatives match the central-difference oracle") {
  const GridPartition p = GridPartition::uniform(31, 31);
  const SampledBasis cache(p, 2);
  for (unsigned seed : {100u, 200u}) {
    const ShapeField q1_rot = testing::random_smooth_field(p, seed);
    const ShapeField q2_tilde = testing::random_smooth_field(p, seed + 1);
    const GradientField g = assemble_gradient(q1_rot, q2_tilde, cache);
    for (std::size_t a = 0; a < cache.size(); ++a) {
      const TangentField v = sample_tangent(cache.element(a), p);
      const double an = g.coefficients[a];
      // Shrink the oracle step if the O(eps) kink term of the piecewise
      // smooth energy hides a near-cancelling derivative.
      bool ok = false;
      for (const double eps : {1e-5, 1e-6, 1e-7}) {
        const double fd = central_difference(q1_rot, q2_tilde, v, eps);
        if (std::abs(an - fd) <= std::max(1e-3 * std::abs(fd), 1e-8)) {
          ok = true;
          break;
        }
      }
      CHECK(ok);
    }
  }
}

TEST_CASE("assembled coefficients equal per-direction derivatives") {
  const GridPartition p = GridPartition::uniform(21, 21);
  const SampledBasis cache(p, 1);
  const ShapeField q1_rot = testing::random_smooth_field(p, 300);
  const ShapeField q2_tilde = testing::random_smooth_field(p, 301);
  const GradientField g = assemble_gradient(q1_rot, q2_tilde, cache);
  double norm_sq = 0.0;
  for (std::size_t a = 0; a < cache.size(); ++a) {
    const TangentField v = sample_tangent(cache.element(a), p);
    CHECK_THAT(g.coefficients[a],
               Catch::Matchers::WithinAbs(directional_derivative(q1_rot, q2_tilde, v), 1e-12));
    norm_sq += g.coefficients[a] * g.coefficients[a];
  }
  CHECK_THAT(g.norm, Catch::Matchers::WithinAbs(std::sqrt(norm_sq), 1e-14));

  // The sampled field is exactly the coefficient combination of the cache.
  for (std::size_t j = 0; j < p.n(); ++j)
    for (std::size_t i = 0; i < p.m(); ++i) {
      Vec2 expected = Vec2::Zero();
      for (std::size_t a = 0; a < cache.size(); ++a) {
        const int comp = cache.element(a).slot == Slot::R ? 0 : 1;
        expected[comp] += g.coefficients[a] * cache.value(a)(i, j);
      }
      CHECK_THAT((g.sampled(i, j) - expected).norm(), Catch::Matchers::WithinAbs(0.0, 1e-12));
    }
}

TEST_CASE("gradient of an aligned rotated copy is negligible") {
  const GridPartition p = GridPartition::uniform(31, 31);
  const SampledBasis cache(p, 2);
  const ShapeField q1 = testing::random_smooth_field(p, 400);
  std::mt19937 rng(7);
  const Mat3 rot = testing::random_rotation(rng);
  const ShapeField q2 = rotate(q1, rot);
  const Mat3 fitted = optimal_rotation(q2, q1).rotation.matrix();
  const GradientField g = assemble_gradient(rotate(q1, fitted), q2, cache);
  CHECK(g.norm <= 1e-8);
}

TEST_CASE("energy decreases along the negative gradient for the sine pair") {
  const SurfaceSample s1 = normalize_unit_area(generate({SurfaceKind::Sine2, 2}, 61, 61));
  const SurfaceSample s2 =
      normalize_unit_area(perturb(generate({SurfaceKind::Sine1, 2}, 61, 61), {1.25, 1.0}));
  const ShapeField q1 = compute_shape_field(s1);
  const ShapeField q2 = compute_shape_field(s2);
  Mat3 perm;
  perm << 0, 1, 0, 0, 0, 1, 1, 0, 0;
  const ShapeField q1_rot = rotate(q1, perm);

  const GridPartition& p = q1.partition;
  const SampledBasis cache(p, 5);
  const GradientField g = assemble_gradient(q1_rot, q2, cache);
  REQUIRE(g.norm > 0.0);

  const SafeStepBounds bounds = max_safe_step(g, p);
  const double energy0 = registration_energy(q1, q2, perm, identity_diffeo(p));
  double delta = 0.9 * std::min(bounds.delta_min, bounds.delta_hat_min);
  if (!std::isfinite(delta)) delta = 1.0;
  bool decreased = false;
  for (int halving = 0; halving < 30 && !decreased; ++halving, delta *= 0.5) {
    const DiffeoField h = apply_step(g, p, delta);
    if (registration_energy(q1, q2, perm, h) < energy0) decreased = true;
  }
  CHECK(decreased);
}

TEST_CASE("safe step bounds") {
  const GridPartition p = GridPartition::uniform(21, 21);

  SECTION("zero gradient never limits the step") {
    GradientField g;
    g.sampled = Grid<Vec2>(p.m(), p.n(), Vec2::Zero());
    const SafeStepBounds b = max_safe_step(g, p);
    CHECK(std::isinf(b.delta_min));
    CHECK(std::isinf(b.delta_hat_min));
  }

  SECTION("identity Jacobian gives both bounds equal to 1") {
    GradientField g;
    g.sampled = Grid<Vec2>(p.m(), p.n());
    for (std::size_t j = 0; j < p.n(); ++j)
      for (std::size_t i = 0; i < p.m(); ++i) g.sampled(i, j) = Vec2(p.r_knots[i], p.t_knots[j]);
    const SafeStepBounds b = max_safe_step(g, p);
    // The quadratic has a double root at 1, so roundoff enters as sqrt(eps).
    CHECK_THAT(b.delta_min, Catch::Matchers::WithinAbs(1.0, 1e-7));
    CHECK_THAT(b.delta_hat_min, Catch::Matchers::WithinAbs(1.0, 1e-10));
  }

  SECTION("nearly singular Jacobian with trace 2 bounds the step at 1/2") {
    GradientField g;
    g.sampled = Grid<Vec2>(p.m(), p.n());
    for (std::size_t j = 0; j < p.n(); ++j)
      for (std::size_t i = 0; i < p.m(); ++i) g.sampled(i, j) = Vec2(2.0 * p.r_knots[i], 0.0);
    const SafeStepBounds b = max_safe_step(g, p);
    CHECK_THAT(b.delta_min, Catch::Matchers::WithinAbs(0.5, 1e-10));
    CHECK_THAT(b.delta_hat_min, Catch::Matchers::WithinAbs(0.5, 1e-10));
  }
}

TEST_CASE("apply_step") {
  const GridPartition p = GridPartition::uniform(41, 41);
  const SampledBasis cache(p, 1);

  GradientField g;
  g.coefficients = {1.0, 0.0, 0.0, 0.0, 0.0, 0.0};
  g.sampled = Grid<Vec2>(p.m(), p.n(), Vec2::Zero());
  for (std::size_t j = 0; j < p.n(); ++j)
    for (std::size_t i = 0; i < p.m(); ++i) g.sampled(i, j)[0] = cache.value(0)(i, j);
  g.norm = 1.0;

  SECTION("zero step is the identity") {
    const DiffeoField h = apply_step(g, p, 0.0);
    const DiffeoField id = identity_diffeo(p);
    for (std::size_t flat = 0; flat < h.h.size(); ++flat) CHECK(h.h[flat] == id.h[flat]);
  }

  SECTION("a single sine element moves nodes by the closed form") {
    const DiffeoField h = apply_step(g, p, 0.1);
    for (std::size_t j = 0; j < p.n(); ++j)
      for (std::size_t i = 0; i < p.m(); ++i) {
        const double r = p.r_knots[i];
        const double expected =
            r - 0.1 * std::numbers::sqrt2 * std::sin(std::numbers::pi * r);
        CHECK_THAT(h.h(i, j)[0], Catch::Matchers::WithinAbs(expected, 1e-13));
        CHECK(h.h(i, j)[1] == p.t_knots[j]);
      }
    CHECK(diffeo_diagnostics(h).min_det > 0.0);
  }

  SECTION("boundary nodes stay fixed exactly") {
    const DiffeoField h = apply_step(g, p, 0.2);
    for (std::size_t j = 0; j < p.n(); ++j) {
      CHECK(h.h(0, j)[0] == 0.0);
      CHECK(h.h(p.m() - 1, j)[0] == 1.0);
    }
    for (std::size_t i = 0; i < p.m(); ++i) {
      CHECK(h.h(i, 0)[1] == 0.0);
      CHECK(h.h(i, p.n() - 1)[1] == 1.0);
    }
  }
}

TEST_CASE("steps within the safety bound never violate the post-check") {
  const GridPartition p = GridPartition::uniform(41, 41);
  const SampledBasis cache(p, 3);
  std::mt19937 rng(1234);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    GradientField g;
    g.coefficients.resize(cache.size());
    g.sampled = Grid<Vec2>(p.m(), p.n(), Vec2::Zero());
    for (std::size_t a = 0; a < cache.size(); ++a) {
      g.coefficients[a] = 2.0 * unit(rng);
      const int comp = cache.element(a).slot == Slot::R ? 0 : 1;
      for (std::size_t flat = 0; flat < g.sampled.size(); ++flat)
        g.sampled[flat][comp] += g.coefficients[a] * cache.value(a)[flat];
    }
    const SafeStepBounds b = max_safe_step(g, p);
    double delta = 0.9 * std::min(b.delta_min, b.delta_hat_min);
    if (!std::isfinite(delta)) delta = 1.0;
    DiffeoField h;
    REQUIRE_NOTHROW(h = apply_step(g, p, delta));
    CHECK(diffeo_diagnostics(h).min_det > 0.0);
  }
}

TEST_CASE("oversized steps trip the safety post-check") {
  const GridPartition p = GridPartition::uniform(41, 41);
  const SampledBasis cache(p, 1);
  GradientField g;
  g.sampled = Grid<Vec2>(p.m(), p.n(), Vec2::Zero());
  for (std::size_t flat = 0; flat < g.sampled.size(); ++flat)
    g.sampled[flat][0] = cache.value(0)[flat];
  CHECK_THROWS_WITH(apply_step(g, p, 10.0),
                    Catch::Matchers::ContainsSubstring("step safety violated"));
}

TEST_CASE("composition") {
  const GridPartition p = GridPartition::uniform(51, 51);
  const DiffeoField id = identity_diffeo(p);
  const DiffeoField warp = power_diffeo(p, 1.25, 1.0);

  SECTION("identity on either side reproduces the map at the nodes") {
    const DiffeoField left = compose(id, warp);
    const DiffeoField right = compose(warp, id);
    for (std::size_t flat = 0; flat < warp.h.size(); ++flat) {
      CHECK_THAT((left.h[flat] - warp.h[flat]).norm(), Catch::Matchers::WithinAbs(0.0, 1e-15));
      CHECK(right.h[flat] == warp.h[flat]);
    }
  }

  SECTION("power warp composed with itself matches the closed form") {
    const DiffeoField twice = compose(warp, warp);
    for (std::size_t j = 0; j < p.n(); ++j)
      for (std::size_t i = 1; i + 1 < p.m(); ++i) {
        const double expected = std::pow(p.r_knots[i], 25.0 / 16.0);
        CHECK_THAT(twice.h(i, j)[0], Catch::Matchers::WithinAbs(expected, 5e-3));
      }
  }

  SECTION("a composition that folds the boundary stencil is rejected") {
    // r^5 o r^5 = r^25 collapses so hard toward r=0 that the one-sided
    // stencil slope goes negative there.
    const DiffeoField steep = power_diffeo(p, 5.0, 1.0);
    CHECK_THROWS_WITH(compose(steep, steep),
                      Catch::Matchers::ContainsSubstring("non-positive Jacobian"));
  }
}

TEST_CASE("energy telescope: composed energy equals the step energy") {
  const GridPartition p = GridPartition::uniform(101, 101);
  const ShapeField q1_rot = testing::random_smooth_field(p, 777, 2, 0.2);
  const ShapeField q2 = testing::random_smooth_field(p, 778, 2, 0.2);
  const SampledBasis cache(p, 3);

  const DiffeoField h_prev = power_diffeo(p, 1.1, 1.05);
  const ShapeField q2_tilde = group_action(q2, h_prev);

  const GradientField g = assemble_gradient(q1_rot, q2_tilde, cache);
  const SafeStepBounds b = max_safe_step(g, p);
  double delta = 0.2 * std::min(b.delta_min, b.delta_hat_min);
  if (!std::isfinite(delta) || delta > 1.0) delta = 1.0;
  const DiffeoField h_step = apply_step(g, p, delta);

  const QuadratureWeights w = QuadratureWeights::make(p);
  auto energy = [&](const ShapeField& base, const DiffeoField& h) {
    const ShapeField warped = group_action(base, h);
    double sum = 0.0;
    for (std::size_t j = 0; j < p.n(); ++j)
      for (std::size_t i = 0; i < p.m(); ++i)
        sum += w(i, j) * (q1_rot.q(i, j) - warped.q(i, j)).squaredNorm();
    return sum;
  };

  const double stepwise = energy(q2_tilde, h_step);
  const double composed = energy(q2, compose(h_prev, h_step));
  CHECK_THAT(composed, Catch::Matchers::WithinAbs(stepwise, 1e-3));
}
