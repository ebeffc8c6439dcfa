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

#include "surfreg/report.hpp"
#include "surfreg/surfreg.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <string>

namespace {

surfreg::SurfaceSpec parse_generator(const std::string& text) {
  surfreg::SurfaceSpec spec;
  const auto colon = text.find(':');
  spec.kind = surfreg::parse_surface_kind(text.substr(0, colon));
  if (colon != std::string::npos) {
    spec.k = std::stoi(text.substr(colon + 1));
    if (spec.k < 1) throw std::invalid_argument("generator frequency must be at least 1");
  }
  return spec;
}

surfreg::SurfaceSample make_surface(const std::string& in_path, const std::string& gen_text,
                                    std::size_t grid_m, std::size_t grid_n, const char* which) {
  if (!in_path.empty() && !gen_text.empty())
    throw std::invalid_argument(std::string("give either --in") + which + " or --gen" + which +
                                ", not both");
  if (!in_path.empty()) return surfreg::load_surface_file(in_path);
  if (!gen_text.empty()) return surfreg::generate(parse_generator(gen_text), grid_m, grid_n);
  throw std::invalid_argument(std::string("surface ") + which + " missing: use --in" + which +
                              " or --gen" + which);
}

std::ofstream open_out(const std::string& path, const char* what) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error(std::string("cannot write ") + what + " '" + path + "'");
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Elastic shape registration of two simple surfaces over the unit square"};

  std::string in1, in2, gen1, gen2, init = "dp";
  std::string out_json, boundary_csv, dump_h;
  std::pair<double, double> gamma{1.0, 1.0};
  std::pair<std::size_t, std::size_t> grid{101, 101};

  surfreg::RunConfig cfg;

  app.add_option("--in1", in1, "surface 1 from a file");
  app.add_option("--in2", in2, "surface 2 from a file");
  app.add_option("--gen1", gen1, "surface 1 generator kind[:k], e.g. sine2:2");
  app.add_option("--gen2", gen2, "surface 2 generator kind[:k], e.g. sine1:2");
  app.add_option("--gamma", gamma, "parameter warp exponents a,b applied to surface 2")
      ->delimiter(',');
  app.add_option("--grid", grid, "grid size M,N for generated surfaces")->delimiter(',');
  app.add_option("--init", init, "initial solution: dp or identity")
      ->check(CLI::IsMember({"dp", "identity"}));
  app.add_option("--kl", cfg.kl, "basis truncation parameter KL")->check(CLI::PositiveNumber);
  app.add_option("--grad-tol", cfg.grad_tol, "gradient norm termination tolerance");
  app.add_option("--eps-zero", cfg.eps_zero, "near-zero energy termination tolerance");
  app.add_option("--eps-progress", cfg.eps_progress, "relative stalled-progress tolerance");
  app.add_option("--max-inner", cfg.max_inner_iters, "max gradient steps per rotation round");
  app.add_option("--max-outer", cfg.max_outer_rounds, "max rotation re-optimization rounds");
  app.add_option("--step-safety", cfg.step_safety, "fraction of the largest safe step size");
  app.add_option("--out", out_json, "write the JSON result here");
  app.add_option("--boundary-csv", boundary_csv, "write registered boundary polylines here");
  app.add_option("--dump-h", dump_h, "write the final diffeomorphism grid here");

  CLI11_PARSE(app, argc, argv);
  cfg.init_mode = (init == "dp") ? surfreg::InitMode::Dp : surfreg::InitMode::Identity;

  try {
    surfreg::SurfaceSample s1 = make_surface(in1, gen1, grid.first, grid.second, "1");
    surfreg::SurfaceSample s2 = make_surface(in2, gen2, grid.first, grid.second, "2");

    surfreg::GammaSpec warp{gamma.first, gamma.second};
    if (!warp.is_identity()) {
      bool interpolated = false;
      s2 = surfreg::perturb(s2, warp, &interpolated);
      if (interpolated)
        std::cerr << "warning: --gamma on a loaded surface uses bilinear interpolation\n";
    }

    const surfreg::RegistrationResult res = surfreg::run_registration(s1, s2, cfg);
    const nlohmann::json js = surfreg::result_to_json(res, cfg);

    if (!out_json.empty()) {
      auto out = open_out(out_json, "result JSON");
      out << js.dump(2) << '\n';
      std::cout << "squared_distance=" << res.squared_distance
                << " inner_iterations=" << res.inner_iterations
                << " outer_rounds=" << res.outer_rounds << " wall_time_s=" << res.wall_time_s
                << '\n';
    } else {
      std::cout << js.dump(2) << '\n';
    }
    if (!boundary_csv.empty()) {
      auto out = open_out(boundary_csv, "boundary CSV");
      surfreg::write_boundary_csv(out, res);
    }
    if (!dump_h.empty()) {
      auto out = open_out(dump_h, "diffeomorphism dump");
      surfreg::write_diffeo(out, res.h_final);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
