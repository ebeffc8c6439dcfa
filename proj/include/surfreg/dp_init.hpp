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

#include "surfreg/rotation.hpp"
#include "surfreg/shape_field.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <utility>
#include <vector>

namespace surfreg {

/// A monotone warp of the r parameter: values of gamma at the r knots,
/// strictly increasing from 0 to 1. Applied across every t as the product
/// map h(r,t) = (gamma(r), t).
struct MonotoneWarp {
  std::vector<double> values;
};

/// Configuration of the dynamic-programming partial registration.
struct DpConfig {
  /// Admissible lattice moves (delta_i, delta_j); must contain (1,1) and
  /// have positive components. Default: all coprime pairs with components
  /// up to 4, the standard elastic-matching neighborhood.
  std::vector<std::pair<int, int>> moves = default_moves();
  int max_rounds = 30;
  double tol = 1e-8;  // relative alternation improvement tolerance
  /// Restart the rotation/warp alternation from each of the 24 signed
  /// axis-permutation rotations instead of just the identity.
  bool seed_rotations = true;

  static std::vector<std::pair<int, int>> default_moves() {
    std::vector<std::pair<int, int>> mv;
    for (int a = 1; a <= 4; ++a)
      for (int b = 1; b <= 4; ++b)
        if (std::gcd(a, b) == 1) mv.emplace_back(a, b);
    return mv;
  }
};

struct DpResult {
  Rotation3 rotation;
  DiffeoField h0;
  MonotoneWarp warp;
  double energy = std::numeric_limits<double>::infinity();
  /// Best energy seen after each alternation round of the winning restart;
  /// non-increasing by construction.
  std::vector<double> round_energies;
  int rounds = 0;
};

/// All 24 proper rotations permuting the coordinate axes (signed
/// permutation matrices with determinant +1); the identity comes first.
inline std::vector<Mat3> axis_permutation_rotations() {
  static const int perms[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
  static const int parity[6] = {1, -1, -1, 1, 1, -1};
  std::vector<Mat3> out;
  out.reserve(24);
  for (int p = 0; p < 6; ++p) {
    for (int bits = 0; bits < 8; ++bits) {
      const int s0 = (bits & 1) ? -1 : 1;
      const int s1 = (bits & 2) ? -1 : 1;
      const int s2 = (bits & 4) ? -1 : 1;
      if (parity[p] * s0 * s1 * s2 != 1) continue;
      Mat3 m = Mat3::Zero();
      m(0, perms[p][0]) = s0;
      m(1, perms[p][1]) = s1;
      m(2, perms[p][2]) = s2;
      out.push_back(m);
    }
  }
  return out;
}

namespace dp {

/// Precomputed t-quadrature inner products driving the lattice edge costs.
/// Treating each r-column of a field as one point, the integrand of the
/// product-warp objective at (r_k, gamma) reduces to
///   sa[k] - 2 sqrt(s) <A_k, B(gamma)> + s ||B(gamma)||^2
/// where A is the rotated first field, B(gamma) the linear interpolation of
/// the second field's columns at gamma, and s the local warp slope.
struct CostTables {
  GridPartition partition;
  std::vector<double> sa;  // sa[i]  = sum_j wt_j ||A(i,j)||^2
  std::vector<double> sb;  // sb[p]  = sum_j wt_j ||B(p,j)||^2
  std::vector<double> cb;  // cb[p]  = sum_j wt_j <B(p,j), B(p+1,j)>
  Grid<double> ab;         // ab(i,p) = sum_j wt_j <A(i,j), B(p,j)>
};

inline CostTables make_cost_tables(const ShapeField& q1_rotated, const ShapeField& q2) {
  if (!q1_rotated.partition.same_as(q2.partition))
    throw std::invalid_argument("dp: fields use different partitions");
  const GridPartition& p = q1_rotated.partition;
  const std::vector<double> wt = QuadratureWeights::line_weights(p.t_knots);
  const std::size_t m = p.m(), n = p.n();

  CostTables tb;
  tb.partition = q1_rotated.partition;
  tb.sa.assign(m, 0.0);
  tb.sb.assign(m, 0.0);
  tb.cb.assign(m, 0.0);
  tb.ab = Grid<double>(m, m, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < m; ++i) {
      tb.sa[i] += wt[j] * q1_rotated.q(i, j).squaredNorm();
      tb.sb[i] += wt[j] * q2.q(i, j).squaredNorm();
      if (i + 1 < m) tb.cb[i] += wt[j] * q2.q(i, j).dot(q2.q(i + 1, j));
    }
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t q = 0; q < m; ++q) tb.ab(i, q) += wt[j] * q1_rotated.q(i, j).dot(q2.q(q, j));
  }
  return tb;
}

/// Squared-residual column cost at knot k with warp value y and slope s.
inline double column_cost(const CostTables& tb, std::size_t k, double y, double s,
                          double sqrt_s) {
  const auto& rk = tb.partition.r_knots;
  const std::size_t p = detail::cell_index(rk, y);
  const double a = (y - rk[p]) / (rk[p + 1] - rk[p]);
  const double mixed = (1.0 - a) * tb.ab(k, p) + a * tb.ab(k, p + 1);
  const double bb =
      (1.0 - a) * (1.0 - a) * tb.sb[p] + 2.0 * a * (1.0 - a) * tb.cb[p] + a * a * tb.sb[p + 1];
  return tb.sa[k] - 2.0 * sqrt_s * mixed + s * bb;
}

/// Cost of the lattice edge (i0,j0) -> (i1,j1): the trapezoidal r-integral
/// over [r_i0, r_i1] of the column cost, with the warp linear on the
/// segment (slope constant per move).
inline double edge_cost(const CostTables& tb, std::size_t i0, std::size_t j0, std::size_t i1,
                        std::size_t j1) {
  const auto& rk = tb.partition.r_knots;
  const double s = (rk[j1] - rk[j0]) / (rk[i1] - rk[i0]);
  const double sqrt_s = std::sqrt(s);
  double cost = 0.0;
  for (std::size_t k = i0; k <= i1; ++k) {
    double w = 0.0;
    if (k > i0) w += 0.5 * (rk[k] - rk[k - 1]);
    if (k < i1) w += 0.5 * (rk[k + 1] - rk[k]);
    const double y = rk[j0] + s * (rk[k] - rk[i0]);
    cost += w * column_cost(tb, k, y, s, sqrt_s);
  }
  return cost;
}

/// Exact shortest path on the monotone index lattice from (0,0) to
/// (M-1,M-1) under the admissible moves. Returns the objective value and
/// the path vertices.
inline double solve_lattice(const CostTables& tb, const std::vector<std::pair<int, int>>& moves,
                            std::vector<std::pair<std::size_t, std::size_t>>& path_out) {
  const std::size_t m = tb.partition.m();
  constexpr double inf = std::numeric_limits<double>::infinity();
  Grid<double> dist(m, m, inf);
  Grid<int> parent(m, m, -1);
  dist(0, 0) = 0.0;

  for (std::size_t j = 0; j < m; ++j) {
    for (std::size_t i = 0; i < m; ++i) {
      if (i == 0 && j == 0) continue;
      double best = inf;
      int best_move = -1;
      for (std::size_t mv = 0; mv < moves.size(); ++mv) {
        const auto [di, dj] = moves[mv];
        if (i < static_cast<std::size_t>(di) || j < static_cast<std::size_t>(dj)) continue;
        const std::size_t pi = i - di, pj = j - dj;
        if (dist(pi, pj) == inf) continue;
        const double c = dist(pi, pj) + edge_cost(tb, pi, pj, i, j);
        if (c < best) {
          best = c;
          best_move = static_cast<int>(mv);
        }
      }
      dist(i, j) = best;
      parent(i, j) = best_move;
    }
  }

  const double total = dist(m - 1, m - 1);
  if (!std::isfinite(total)) throw std::runtime_error("dp: no admissible lattice path (non-finite cost)");

  path_out.clear();
  std::size_t i = m - 1, j = m - 1;
  path_out.emplace_back(i, j);
  while (i != 0 || j != 0) {
    const auto [di, dj] = moves[static_cast<std::size_t>(parent(i, j))];
    i -= di;
    j -= dj;
    path_out.emplace_back(i, j);
  }
  std::reverse(path_out.begin(), path_out.end());
  return total;
}

inline MonotoneWarp warp_from_path(const GridPartition& p,
                                   const std::vector<std::pair<std::size_t, std::size_t>>& path) {
  const auto& rk = p.r_knots;
  MonotoneWarp w;
  w.values.assign(p.m(), 0.0);
  for (std::size_t e = 0; e + 1 < path.size(); ++e) {
    const auto [i0, j0] = path[e];
    const auto [i1, j1] = path[e + 1];
    const double s = (rk[j1] - rk[j0]) / (rk[i1] - rk[i0]);
    for (std::size_t k = i0; k <= i1; ++k) w.values[k] = rk[j0] + s * (rk[k] - rk[i0]);
  }
  w.values.front() = 0.0;
  w.values.back() = 1.0;
  return w;
}

}  // namespace dp

/// The product diffeomorphism h(r,t) = (gamma(r), t).
inline DiffeoField product_diffeo(const GridPartition& p, const MonotoneWarp& warp) {
  if (warp.values.size() != p.m())
    throw std::invalid_argument("product_diffeo: warp length does not match partition");
  DiffeoField d;
  d.partition = p;
  d.h = Grid<Vec2>(p.m(), p.n());
  for (std::size_t j = 0; j < p.n(); ++j)
    for (std::size_t i = 0; i < p.m(); ++i) d.h(i, j) = Vec2(warp.values[i], p.t_knots[j]);
  return d;
}

/// Partial elastic registration by alternating optimal rotation with an
/// exact dynamic-programming search over monotone product warps of the r
/// parameter. Restarts from each seed rotation and keeps the best
/// candidate; energies are tracked with the same group-action quadrature
/// the rest of the pipeline uses, so the reported rounds are non-increasing.
inline DpResult dp_partial_registration(const ShapeField& q1, const ShapeField& q2,
                                        const DpConfig& cfg) {
  if (!q1.partition.same_as(q2.partition))
    throw std::invalid_argument("dp_partial_registration: fields use different partitions");
  bool has_unit_move = false;
  for (const auto& [di, dj] : cfg.moves) {
    if (di <= 0 || dj <= 0)
      throw std::invalid_argument("dp_partial_registration: moves must have positive components");
    if (di == 1 && dj == 1) has_unit_move = true;
  }
  if (!has_unit_move)
    throw std::invalid_argument("dp_partial_registration: slope set must contain the move (1,1)");

  std::vector<Mat3> seeds;
  if (cfg.seed_rotations)
    seeds = axis_permutation_rotations();
  else
    seeds = {Mat3::Identity()};

  DpResult best;
  for (const Mat3& seed : seeds) {
    Mat3 rot = seed;
    double seed_best = std::numeric_limits<double>::infinity();
    MonotoneWarp seed_warp;
    DiffeoField seed_h;
    Mat3 seed_rot = rot;
    std::vector<double> rounds;

    for (int round = 0; round < cfg.max_rounds; ++round) {
      const dp::CostTables tables = dp::make_cost_tables(rotate(q1, rot), q2);
      std::vector<std::pair<std::size_t, std::size_t>> path;
      dp::solve_lattice(tables, cfg.moves, path);
      const MonotoneWarp warp = dp::warp_from_path(q1.partition, path);
      const DiffeoField h = product_diffeo(q1.partition, warp);
      if (diffeo_diagnostics(h).min_det <= 0.0) break;  // reject pathological boundary stencil

      double energy = registration_energy(q1, q2, rot, h);
      const Rotation3 refit = optimal_rotation(group_action(q2, h), q1).rotation;
      const double refit_energy = registration_energy(q1, q2, refit.matrix(), h);
      Mat3 round_rot = rot;
      if (refit_energy <= energy) {
        energy = refit_energy;
        round_rot = refit.matrix();
      }
      rot = round_rot;

      const double prev = seed_best;
      if (energy < seed_best) {
        seed_best = energy;
        seed_warp = warp;
        seed_h = h;
        seed_rot = round_rot;
      }
      rounds.push_back(seed_best);
      if (round > 0 && !(prev - seed_best > cfg.tol * std::max(prev, 1e-30))) break;
    }

    if (seed_best < best.energy) {
      best.energy = seed_best;
      best.warp = std::move(seed_warp);
      best.h0 = std::move(seed_h);
      best.rotation = Rotation3::from_matrix(seed_rot);
      best.round_energies = std::move(rounds);
      best.rounds = static_cast<int>(best.round_energies.size());
    }
  }

  if (!std::isfinite(best.energy))
    throw std::runtime_error("dp_partial_registration: no valid warp candidate found");
  return best;
}

}  // namespace surfreg
