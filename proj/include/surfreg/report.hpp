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

#include "surfreg/registration.hpp"

#include <json.hpp>

#include <ostream>
#include <string>

namespace surfreg {

inline nlohmann::json config_to_json(const RunConfig& cfg) {
  nlohmann::json moves = nlohmann::json::array();
  for (const auto& [di, dj] : cfg.dp.moves) moves.push_back({di, dj});
  return {
      {"init", cfg.init_mode == InitMode::Dp ? "dp" : "identity"},
      {"kl", cfg.kl},
      {"eps_zero", cfg.eps_zero},
      {"eps_progress", cfg.eps_progress},
      {"grad_tol", cfg.grad_tol},
      {"max_inner", cfg.max_inner_iters},
      {"max_outer", cfg.max_outer_rounds},
      {"step_safety", cfg.step_safety},
      {"dp_max_rounds", cfg.dp.max_rounds},
      {"dp_tol", cfg.dp.tol},
      {"dp_moves", moves},
  };
}

inline nlohmann::json result_to_json(const RegistrationResult& res, const RunConfig& cfg) {
  nlohmann::json rotation = nlohmann::json::array();
  const Mat3& m = res.rotation.matrix();
  for (int row = 0; row < 3; ++row)
    for (int col = 0; col < 3; ++col) rotation.push_back(m(row, col));
  return {
      {"squared_distance", res.squared_distance},
      {"rotation", rotation},
      {"inner_iterations", res.inner_iterations},
      {"outer_rounds", res.outer_rounds},
      {"energy_trace", res.energy_trace},
      {"wall_time_s", res.wall_time_s},
      {"config", config_to_json(cfg)},
  };
}

/// Boundary polylines of the registered pair (rotated first surface and
/// reparametrized second surface), one row per boundary node:
/// surface,edge,index,x,y,z with edges r0, r1, t0, t1.
inline void write_boundary_csv(std::ostream& out, const RegistrationResult& res) {
  out.precision(17);
  out << "surface,edge,index,x,y,z\n";

  const GridPartition& p = res.s1_normalized.partition;
  const std::size_t m = p.m(), n = p.n();

  auto emit = [&](const char* surface, const char* edge, std::size_t index, const Vec3& pt) {
    out << surface << ',' << edge << ',' << index << ',' << pt.x() << ',' << pt.y() << ',' << pt.z()
        << '\n';
  };

  auto rotated_point = [&](std::size_t i, std::size_t j) {
    return Vec3(res.rotation.matrix() * res.s1_normalized.points(i, j));
  };
  auto reparam_point = [&](std::size_t i, std::size_t j) {
    const Vec2& at = res.h_final.h(i, j);
    return bilinear_sample(res.s2_normalized.points, res.s2_normalized.partition, at[0], at[1]);
  };

  auto edges = [&](const char* surface, auto&& point) {
    for (std::size_t j = 0; j < n; ++j) emit(surface, "r0", j, point(std::size_t{0}, j));
    for (std::size_t j = 0; j < n; ++j) emit(surface, "r1", j, point(m - 1, j));
    for (std::size_t i = 0; i < m; ++i) emit(surface, "t0", i, point(i, std::size_t{0}));
    for (std::size_t i = 0; i < m; ++i) emit(surface, "t1", i, point(i, n - 1));
  };
  edges("rotated_first", rotated_point);
  edges("reparametrized_second", reparam_point);
}

/// The diffeomorphism grid in the surface text layout with 2-D points:
/// `M N`, the knot lines, then M*N rows `h1 h2` with the r index fastest.
inline void write_diffeo(std::ostream& out, const DiffeoField& d) {
  out.precision(17);
  const GridPartition& p = d.partition;
  out << p.m() << ' ' << p.n() << '\n';
  for (std::size_t i = 0; i < p.m(); ++i) out << p.r_knots[i] << (i + 1 < p.m() ? ' ' : '\n');
  for (std::size_t j = 0; j < p.n(); ++j) out << p.t_knots[j] << (j + 1 < p.n() ? ' ' : '\n');
  for (std::size_t flat = 0; flat < d.h.size(); ++flat)
    out << d.h[flat][0] << ' ' << d.h[flat][1] << '\n';
}

}  // namespace surfreg
