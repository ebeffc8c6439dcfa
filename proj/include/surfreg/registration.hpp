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

#include "surfreg/dp_init.hpp"
#include "surfreg/gradient.hpp"
#include "surfreg/rotation.hpp"
#include "surfreg/shape_field.hpp"
#include "surfreg/surface.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace surfreg {

enum class InitMode { Dp, Identity };

struct RunConfig {
  InitMode init_mode = InitMode::Dp;
  int kl = 5;
  double eps_zero = 1e-4;       // "close to zero" energy test
  double eps_progress = 1e-4;   // relative "not much less than" test
  double grad_tol = 1e-4;       // gradient norm termination
  int max_inner_iters = 200;    // gradient steps per rotation round
  int max_outer_rounds = 10;    // rotation re-optimization cap
  double step_safety = 0.9;     // fraction of the largest safe step
  DpConfig dp;
};

/// Worst-case diffeomorphism health observed across a run: discrete
/// Jacobian determinants and diagonal minors of every accepted step map and
/// every accumulated composition.
struct RunDiagnostics {
  double min_step_det = std::numeric_limits<double>::infinity();
  double min_accum_det = std::numeric_limits<double>::infinity();
  double min_step_minor = std::numeric_limits<double>::infinity();
  double min_accum_minor = std::numeric_limits<double>::infinity();
};

struct RegistrationResult {
  double squared_distance = 0.0;
  Rotation3 rotation;
  DiffeoField h_final;
  int inner_iterations = 0;
  int outer_rounds = 0;
  std::vector<double> energy_trace;  // non-increasing across accepted states
  double wall_time_s = 0.0;

  std::vector<StepReport> steps;
  RunDiagnostics diagnostics;
  SurfaceSample s1_normalized;  // unit-area inputs actually registered
  SurfaceSample s2_normalized;
};

/// Register two sampled surfaces: surface 1 is rotated, surface 2 is
/// reparametrized. Partitions are scaled to the unit square and both
/// surfaces normalized to unit area; the initial (rotation, warp) comes
/// from the dynamic-programming partial registration (or a single rotation
/// fit at the identity), then inner gradient-descent passes alternate with
/// rotation re-fits until the energy is near zero, progress stalls, or the
/// round cap is reached.
inline RegistrationResult run_registration(const SurfaceSample& s1_in, const SurfaceSample& s2_in,
                                           const RunConfig& cfg) {
  const auto t_start = std::chrono::steady_clock::now();

  if (s1_in.partition.m() != s2_in.partition.m() || s1_in.partition.n() != s2_in.partition.n())
    throw std::invalid_argument("run_registration: surface grid dimensions do not match");

  SurfaceSample s1{scale_partition(s1_in.partition), s1_in.points, s1_in.analytic};
  SurfaceSample s2{scale_partition(s2_in.partition), s2_in.points, s2_in.analytic};
  if (!s1.partition.same_as(s2.partition, 1e-9))
    throw std::invalid_argument("run_registration: scaled surface partitions do not match");

  RegistrationResult res;
  res.s1_normalized = normalize_unit_area(s1);
  res.s2_normalized = normalize_unit_area(s2);

  const ShapeField q1 = compute_shape_field(res.s1_normalized);
  const ShapeField q2 = compute_shape_field(res.s2_normalized);
  const GridPartition& p = q1.partition;
  const SampledBasis basis(p, cfg.kl);

  // Identity-initialized candidate: the identity rotation and the identity
  // warp; descent itself has to discover the alignment.
  const DiffeoField h_id = identity_diffeo(p);
  const double energy_id = registration_energy(q1, q2, Mat3::Identity(), h_id);

  Rotation3 rot = Rotation3::identity();
  DiffeoField h = h_id;
  double energy0 = energy_id;
  if (cfg.init_mode == InitMode::Dp) {
    const DpResult dp = dp_partial_registration(q1, q2, cfg.dp);
    if (dp.energy <= energy_id) {
      rot = dp.rotation;
      h = dp.h0;
      energy0 = dp.energy;
    }
  }

  if (!std::isfinite(energy0))
    throw std::runtime_error("run_registration: non-finite registration energy");

  res.energy_trace.push_back(energy0);
  ShapeField q1_rot = rotate(q1, rot.matrix());
  bool done = energy0 <= cfg.eps_zero;

  while (!done && res.outer_rounds < cfg.max_outer_rounds) {
    for (int iter = 0; iter < cfg.max_inner_iters; ++iter) {
      const ShapeField q2_tilde = group_action(q2, h);
      const double energy = res.energy_trace.back();

      const GradientField g = assemble_gradient(q1_rot, q2_tilde, basis);
      if (g.norm <= cfg.grad_tol) break;

      const SafeStepBounds bounds = max_safe_step(g, p);
      double delta = cfg.step_safety * std::min(bounds.delta_min, bounds.delta_hat_min);
      double max_disp = 0.0;
      for (std::size_t flat = 0; flat < g.sampled.size(); ++flat)
        max_disp = std::max(max_disp, g.sampled[flat].cwiseAbs().maxCoeff());
      if (max_disp > 0.0) delta = std::min(delta, 0.25 / max_disp);
      if (!(delta > 0.0) || !std::isfinite(delta)) break;

      StepReport rep;
      rep.delta_min = bounds.delta_min;
      rep.delta_hat_min = bounds.delta_hat_min;
      rep.grad_norm = g.norm;
      rep.energy_before = energy;

      DiffeoField h_step, h_new;
      DiffeoDiagnostics dstep, daccum;
      double energy_new = energy;
      for (int halving = 0; halving <= 30; ++halving) {
        rep.halvings = halving;
        // A trial is valid only when both the step map and the composed map
        // keep a positive Jacobian determinant and positive diagonal minors
        // (the injectivity certificate). The composed grid is only
        // approximately governed by the step bound, so oversized trials are
        // rejected here exactly like non-decreasing ones.
        try {
          h_step = apply_step(g, p, delta);
          h_new = compose(h, h_step);
          dstep = diffeo_diagnostics(h_step);
          daccum = diffeo_diagnostics(h_new);
          if (dstep.min_det > 0.0 && dstep.min_diag_minor > 0.0 && daccum.min_det > 0.0 &&
              daccum.min_diag_minor > 0.0) {
            energy_new = registration_energy(q1, q2, rot.matrix(), h_new);
            if (energy_new < energy) {
              rep.accepted = true;
              break;
            }
          }
        } catch (const std::runtime_error&) {
        }
        delta *= 0.5;
      }
      rep.delta = delta;
      rep.energy_after = energy_new;
      res.steps.push_back(rep);
      if (!rep.accepted) break;

      res.diagnostics.min_step_det = std::min(res.diagnostics.min_step_det, dstep.min_det);
      res.diagnostics.min_step_minor = std::min(res.diagnostics.min_step_minor, dstep.min_diag_minor);
      res.diagnostics.min_accum_det = std::min(res.diagnostics.min_accum_det, daccum.min_det);
      res.diagnostics.min_accum_minor =
          std::min(res.diagnostics.min_accum_minor, daccum.min_diag_minor);

      h = std::move(h_new);
      res.energy_trace.push_back(energy_new);
      ++res.inner_iterations;

      if (energy_new <= cfg.eps_zero) {
        done = true;
        break;
      }
      if (!(energy - energy_new > cfg.eps_progress * energy)) break;
    }
    if (done) break;

    ++res.outer_rounds;
    const double energy_before_refit = res.energy_trace.back();
    const ShapeField q2_tilde = group_action(q2, h);
    const Rotation3 refit = optimal_rotation(q2_tilde, q1).rotation;
    const double energy_refit = registration_energy(q1, q2, refit.matrix(), h);
    if (energy_refit <= energy_before_refit) {
      rot = refit;
      q1_rot = rotate(q1, rot.matrix());
      res.energy_trace.push_back(energy_refit);
    }
    if (res.energy_trace.back() <= cfg.eps_zero) break;
    if (!(energy_before_refit - energy_refit > cfg.eps_progress * energy_before_refit)) break;
  }

  res.squared_distance = res.energy_trace.back();
  res.rotation = rot;
  res.h_final = std::move(h);
  res.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return res;
}

}  // namespace surfreg
