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

#include "surfreg/surface_zoo.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <sstream>

using namespace surfreg;

TEST_CASE("generator formulas at grid nodes") {
  const SurfaceSample sine = generate({SurfaceKind::Sine1, 2}, 101, 101);
  CHECK(sine.points.size() == 10201);
  CHECK_THAT(sine.points(25, 40).z(), Catch::Matchers::WithinAbs(1.0, 1e-15));  // sin(pi/2) at r=1/4
  CHECK_THAT(sine.points(25, 40).x(), Catch::Matchers::WithinAbs(0.25, 1e-15));

  const SurfaceSample heli = generate({SurfaceKind::Helicoid1, 4}, 21, 21);
  const double r = heli.partition.r_knots[5], t = heli.partition.t_knots[7];
  CHECK_THAT(heli.points(5, 7).x(),
             Catch::Matchers::WithinAbs(r * std::cos(4.0 * std::numbers::pi * t), 1e-15));
  CHECK_THAT(heli.points(5, 7).z(),
             Catch::Matchers::WithinAbs(4.0 * std::numbers::pi * t, 1e-15));

  const SurfaceSample cs = generate({SurfaceKind::CosSin1, 1}, 11, 11);
  CHECK_THAT(cs.points(5, 5).z(),
             Catch::Matchers::WithinAbs(std::cos(0.25 * std::numbers::pi) *
                                            std::sin(0.25 * std::numbers::pi),
                                        1e-15));
}

TEST_CASE("type 1 surfaces are the axis permutation of type 2") {
  Mat3 perm;
  perm << 0, 1, 0, 0, 0, 1, 1, 0, 0;
  const std::pair<SurfaceKind, SurfaceKind> pairs[] = {
      {SurfaceKind::Sine1, SurfaceKind::Sine2},
      {SurfaceKind::Helicoid1, SurfaceKind::Helicoid2},
      {SurfaceKind::CosSin1, SurfaceKind::CosSin2},
  };
  for (const auto& [one, two] : pairs) {
    const SurfaceSample a = generate({one, 2}, 21, 21);
    const SurfaceSample b = generate({two, 2}, 21, 21);
    for (std::size_t flat = 0; flat < a.points.size(); ++flat)
      CHECK_THAT((a.points[flat] - perm * b.points[flat]).norm(),
                 Catch::Matchers::WithinAbs(0.0, 1e-15));
  }
}

TEST_CASE("generation is deterministic") {
  const SurfaceSample a = generate({SurfaceKind::Helicoid2, 4}, 51, 51);
  const SurfaceSample b = generate({SurfaceKind::Helicoid2, 4}, 51, 51);
  for (std::size_t flat = 0; flat < a.points.size(); ++flat) CHECK(a.points[flat] == b.points[flat]);
}

TEST_CASE("perturbation") {
  const SurfaceSample base = generate({SurfaceKind::Sine1, 2}, 101, 101);

  SECTION("identity warp is bit-exact") {
    const SurfaceSample same = perturb(base, {1.0, 1.0});
    for (std::size_t flat = 0; flat < base.points.size(); ++flat)
      CHECK(same.points[flat] == base.points[flat]);
  }

  SECTION("analytic re-evaluation at the warped knots") {
    const SurfaceSample warped = perturb(base, {1.25, 1.0});
    const double expected = std::sin(2.0 * std::numbers::pi * std::pow(0.5, 1.25));
    CHECK_THAT(warped.points(50, 10).z(), Catch::Matchers::WithinAbs(expected, 1e-15));
  }

  SECTION("a reparametrization preserves the area") {
    const SurfaceSample warped = perturb(base, {1.25, 1.25});
    CHECK_THAT(approximate_area(warped),
               Catch::Matchers::WithinAbs(approximate_area(base), 1e-3));
  }

  SECTION("loaded surfaces fall back to interpolation with a warning flag") {
    std::stringstream buf;
    save_surface(buf, base);
    const SurfaceSample loaded = load_surface(buf);
    bool interpolated = false;
    const SurfaceSample warped = perturb(loaded, {1.25, 1.0}, &interpolated);
    CHECK(interpolated);
    // Interpolated values stay close to the analytic ones on a fine grid.
    const SurfaceSample exact = perturb(base, {1.25, 1.0});
    double max_err = 0.0;
    for (std::size_t flat = 0; flat < warped.points.size(); ++flat)
      max_err = std::max(max_err, (warped.points[flat] - exact.points[flat]).norm());
    CHECK(max_err <= 5e-3);
  }

  SECTION("generated surfaces keep an analytic form after perturbation") {
    bool interpolated = true;
    const SurfaceSample twice = perturb(perturb(base, {1.25, 1.0}), {1.0, 1.25}, &interpolated);
    CHECK_FALSE(interpolated);
    const double expected =
        std::sin(2.0 * std::numbers::pi * std::pow(0.5, 1.25));
    CHECK_THAT(twice.points(50, 10).z(), Catch::Matchers::WithinAbs(expected, 1e-15));
  }
}

TEST_CASE("kind names round-trip") {
  for (SurfaceKind kind : {SurfaceKind::Sine1, SurfaceKind::Sine2, SurfaceKind::Helicoid1,
                           SurfaceKind::Helicoid2, SurfaceKind::CosSin1, SurfaceKind::CosSin2})
    CHECK(parse_surface_kind(surface_kind_name(kind)) == kind);
  CHECK_THROWS_AS(parse_surface_kind("moebius"), std::invalid_argument);
}
