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

#include <Eigen/Geometry>

#include <cmath>
#include <fstream>
#include <functional>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

namespace surfreg {

/// M×N point samples of a parametrization c over the partition.
/// `analytic`, when non-null, evaluates the underlying closed form c(r,t);
/// generators set it so that parameter warps can be re-evaluated exactly.
struct SurfaceSample {
  GridPartition partition;
  Grid<Vec3> points;
  std::function<Vec3(double, double)> analytic;
};

namespace detail {

/// Tokenizer over a whitespace-separated stream; '#' starts a comment that
/// runs to end of line.
class TokenReader {
 public:
  explicit TokenReader(std::istream& in) : in_(in) {}

  bool next(std::string& tok) {
    while (in_ >> tok) {
      if (tok.front() == '#') {
        std::string rest;
        std::getline(in_, rest);
        continue;
      }
      return true;
    }
    return false;
  }

 private:
  std::istream& in_;
};

inline double parse_real(const std::string& tok, const char* what) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(tok, &pos);
  } catch (const std::exception&) {
    throw std::runtime_error(std::string("load_surface: malformed ") + what + " '" + tok + "'");
  }
  if (pos != tok.size())
    throw std::runtime_error(std::string("load_surface: malformed ") + what + " '" + tok + "'");
  return v;
}

}  // namespace detail

/// Parse the text surface format: `M N`, then M r-knots, N t-knots, then
/// M*N point rows `x y z` with the r index varying fastest.
inline SurfaceSample load_surface(std::istream& in) {
  detail::TokenReader reader(in);
  std::string tok;

  auto need = [&](const char* what) {
    if (!reader.next(tok))
      throw std::runtime_error(std::string("load_surface: unexpected end of input reading ") + what);
  };

  need("header");
  long m = 0, n = 0;
  try {
    m = std::stol(tok);
    need("header");
    n = std::stol(tok);
  } catch (const std::exception&) {
    throw std::runtime_error("load_surface: malformed header (expected two integers M N)");
  }
  if (m < 2 || n < 2)
    throw std::runtime_error("load_surface: malformed header (M and N must both be at least 2)");

  std::vector<double> rk(static_cast<std::size_t>(m)), tk(static_cast<std::size_t>(n));
  for (auto& v : rk) {
    need("r knots");
    v = detail::parse_real(tok, "r knot");
  }
  for (auto& v : tk) {
    need("t knots");
    v = detail::parse_real(tok, "t knot");
  }
  for (double v : rk)
    if (!std::isfinite(v)) throw std::runtime_error("load_surface: non-finite value in r knots");
  for (double v : tk)
    if (!std::isfinite(v)) throw std::runtime_error("load_surface: non-finite value in t knots");
  for (std::size_t i = 1; i < rk.size(); ++i)
    if (!(rk[i] > rk[i - 1])) throw std::runtime_error("load_surface: r knots not strictly increasing");
  for (std::size_t j = 1; j < tk.size(); ++j)
    if (!(tk[j] > tk[j - 1])) throw std::runtime_error("load_surface: t knots not strictly increasing");

  SurfaceSample s;
  s.partition = GridPartition(std::move(rk), std::move(tk));
  s.points = Grid<Vec3>(s.partition.m(), s.partition.n());

  const std::size_t total = s.points.size();
  for (std::size_t flat = 0; flat < total; ++flat) {
    Vec3 pt;
    for (int c = 0; c < 3; ++c) {
      if (!reader.next(tok))
        throw std::runtime_error("load_surface: point count mismatch (fewer than M*N points)");
      pt[c] = detail::parse_real(tok, "coordinate");
      if (!std::isfinite(pt[c]))
        throw std::runtime_error("load_surface: non-finite value in point coordinates");
    }
    s.points[flat] = pt;
  }
  if (reader.next(tok))
    throw std::runtime_error("load_surface: point count mismatch (more than M*N points)");
  return s;
}

inline SurfaceSample load_surface_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_surface: cannot open '" + path + "'");
  return load_surface(in);
}

inline void save_surface(std::ostream& out, const SurfaceSample& s) {
  out.precision(17);
  out << s.partition.m() << ' ' << s.partition.n() << '\n';
  for (std::size_t i = 0; i < s.partition.m(); ++i)
    out << s.partition.r_knots[i] << (i + 1 < s.partition.m() ? ' ' : '\n');
  for (std::size_t j = 0; j < s.partition.n(); ++j)
    out << s.partition.t_knots[j] << (j + 1 < s.partition.n() ? ' ' : '\n');
  for (std::size_t flat = 0; flat < s.points.size(); ++flat) {
    const Vec3& p = s.points[flat];
    out << p.x() << ' ' << p.y() << ' ' << p.z() << '\n';
  }
}

/// Surface area approximated by splitting every grid cell into the two
/// triangles (c_ij, c_{i+1,j+1}, c_{i,j+1}) and (c_ij, c_{i+1,j}, c_{i+1,j+1}),
/// each contributing half the norm of its edge cross product.
inline double approximate_area(const SurfaceSample& s) {
  const std::size_t m = s.partition.m(), n = s.partition.n();
  double area = 0.0;
  for (std::size_t j = 0; j + 1 < n; ++j) {
    for (std::size_t i = 0; i + 1 < m; ++i) {
      const Vec3& p00 = s.points(i, j);
      const Vec3& p10 = s.points(i + 1, j);
      const Vec3& p01 = s.points(i, j + 1);
      const Vec3& p11 = s.points(i + 1, j + 1);
      area += 0.5 * (p11 - p00).cross(p01 - p00).norm();
      area += 0.5 * (p10 - p00).cross(p11 - p00).norm();
    }
  }
  return area;
}

/// Scale the sample so approximate_area == 1; every point is divided by the
/// square root of the current approximate area.
inline SurfaceSample normalize_unit_area(const SurfaceSample& s) {
  const double area = approximate_area(s);
  if (!(area > 1e-12))
    throw std::runtime_error("normalize_unit_area: degenerate surface (area <= 1e-12)");
  const double scale = 1.0 / std::sqrt(area);
  SurfaceSample out;
  out.partition = s.partition;
  out.points = Grid<Vec3>(s.partition.m(), s.partition.n());
  for (std::size_t flat = 0; flat < s.points.size(); ++flat) out.points[flat] = scale * s.points[flat];
  if (s.analytic) {
    auto base = s.analytic;
    out.analytic = [base, scale](double r, double t) { return scale * base(r, t); };
  }
  return out;
}

}  // namespace surfreg
