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

#include <Eigen/Core>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace surfreg {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;

/// Strictly increasing knot vectors discretizing the parameter rectangle.
/// After scale_partition() both knot vectors span [0,1].
struct GridPartition {
  std::vector<double> r_knots;
  std::vector<double> t_knots;

  GridPartition() = default;

  GridPartition(std::vector<double> r, std::vector<double> t)
      : r_knots(std::move(r)), t_knots(std::move(t)) {
    check_knots(r_knots, "r");
    check_knots(t_knots, "t");
  }

  std::size_t m() const { return r_knots.size(); }
  std::size_t n() const { return t_knots.size(); }

  bool is_unit(double tol = 1e-12) const {
    return std::abs(r_knots.front()) <= tol && std::abs(r_knots.back() - 1.0) <= tol &&
           std::abs(t_knots.front()) <= tol && std::abs(t_knots.back() - 1.0) <= tol;
  }

  static GridPartition uniform(std::size_t m, std::size_t n) {
    std::vector<double> r(m), t(n);
    for (std::size_t i = 0; i < m; ++i) r[i] = static_cast<double>(i) / static_cast<double>(m - 1);
    for (std::size_t j = 0; j < n; ++j) t[j] = static_cast<double>(j) / static_cast<double>(n - 1);
    return GridPartition(std::move(r), std::move(t));
  }

  bool same_as(const GridPartition& other, double tol = 1e-12) const {
    if (m() != other.m() || n() != other.n()) return false;
    for (std::size_t i = 0; i < m(); ++i)
      if (std::abs(r_knots[i] - other.r_knots[i]) > tol) return false;
    for (std::size_t j = 0; j < n(); ++j)
      if (std::abs(t_knots[j] - other.t_knots[j]) > tol) return false;
    return true;
  }

 private:
  static void check_knots(const std::vector<double>& k, const char* name) {
    if (k.size() < 2)
      throw std::invalid_argument(std::string("partition: ") + name + " knot vector needs at least 2 entries");
    for (double v : k)
      if (!std::isfinite(v))
        throw std::invalid_argument(std::string("partition: non-finite ") + name + " knot");
    for (std::size_t i = 1; i < k.size(); ++i)
      if (!(k[i] > k[i - 1]))
        throw std::invalid_argument(std::string("partition: ") + name + " knots not strictly increasing");
  }
};

/// Affine map of each knot vector onto [0,1]; relative spacing preserved.
inline GridPartition scale_partition(const GridPartition& p) {
  auto scale = [](const std::vector<double>& k) {
    std::vector<double> out(k.size());
    const double a = k.front(), b = k.back();
    for (std::size_t i = 0; i < k.size(); ++i) out[i] = (k[i] - a) / (b - a);
    out.front() = 0.0;
    out.back() = 1.0;
    return out;
  };
  return GridPartition(scale(p.r_knots), scale(p.t_knots));
}

/// Dense M×N grid of values; index (i,j) pairs with (r_i, t_j) and i varies
/// fastest in memory, matching the surface file ordering.
template <class T>
class Grid {
 public:
  Grid() = default;
  Grid(std::size_t m, std::size_t n) : m_(m), n_(n), data_(m * n) {}
  Grid(std::size_t m, std::size_t n, const T& fill) : m_(m), n_(n), data_(m * n, fill) {}

  std::size_t m() const { return m_; }
  std::size_t n() const { return n_; }
  std::size_t size() const { return data_.size(); }

  T& operator()(std::size_t i, std::size_t j) { return data_[j * m_ + i]; }
  const T& operator()(std::size_t i, std::size_t j) const { return data_[j * m_ + i]; }

  T& operator[](std::size_t flat) { return data_[flat]; }
  const T& operator[](std::size_t flat) const { return data_[flat]; }

  auto begin() { return data_.begin(); }
  auto end() { return data_.end(); }
  auto begin() const { return data_.begin(); }
  auto end() const { return data_.end(); }

  bool same_shape(std::size_t m, std::size_t n) const { return m_ == m && n_ == n; }

 private:
  std::size_t m_ = 0, n_ = 0;
  std::vector<T> data_;
};

/// Separable 2-D trapezoidal weights: w(i,j) = wr[i]*wt[j], summing to the
/// parameter-domain area.
struct QuadratureWeights {
  std::vector<double> wr;
  std::vector<double> wt;

  double operator()(std::size_t i, std::size_t j) const { return wr[i] * wt[j]; }

  static QuadratureWeights make(const GridPartition& p) {
    QuadratureWeights w;
    w.wr = line_weights(p.r_knots);
    w.wt = line_weights(p.t_knots);
    return w;
  }

  static std::vector<double> line_weights(const std::vector<double>& k) {
    const std::size_t n = k.size();
    std::vector<double> w(n, 0.0);
    for (std::size_t i = 0; i + 1 < n; ++i) {
      const double half = 0.5 * (k[i + 1] - k[i]);
      w[i] += half;
      w[i + 1] += half;
    }
    return w;
  }
};

namespace detail {

/// Index of the cell [k[c], k[c+1]] containing x, clamped to valid cells.
inline std::size_t cell_index(const std::vector<double>& k, double x) {
  auto it = std::upper_bound(k.begin(), k.end(), x);
  std::ptrdiff_t c = (it - k.begin()) - 1;
  c = std::clamp<std::ptrdiff_t>(c, 0, static_cast<std::ptrdiff_t>(k.size()) - 2);
  return static_cast<std::size_t>(c);
}

inline double clamp_coordinate(double x, double lo, double hi, double tol, const char* name) {
  if (x < lo - tol || x > hi + tol)
    throw std::domain_error(std::string("bilinear_sample: coordinate ") + name + "=" +
                            std::to_string(x) + " outside the parameter domain");
  return std::clamp(x, lo, hi);
}

/// Derivative weights at `at` of the quadratic through (x0,f0),(x1,f1),(x2,f2).
inline std::array<double, 3> deriv3_weights(double x0, double x1, double x2, double at) {
  return {(2.0 * at - x1 - x2) / ((x0 - x1) * (x0 - x2)),
          (2.0 * at - x0 - x2) / ((x1 - x0) * (x1 - x2)),
          (2.0 * at - x0 - x1) / ((x2 - x0) * (x2 - x1))};
}

}  // namespace detail

/// Bilinear interpolation of a grid field at (r,t) inside the (possibly
/// non-uniform) partition. Coordinates may stray outside the domain by at
/// most `tol` (roundoff) and are clamped; beyond that it is an error.
template <class T>
T bilinear_sample(const Grid<T>& f, const GridPartition& p, double r, double t,
                  double tol = 1e-12) {
  if (!f.same_shape(p.m(), p.n()))
    throw std::invalid_argument("bilinear_sample: grid dimensions do not match partition");
  r = detail::clamp_coordinate(r, p.r_knots.front(), p.r_knots.back(), tol, "r");
  t = detail::clamp_coordinate(t, p.t_knots.front(), p.t_knots.back(), tol, "t");

  const std::size_t i = detail::cell_index(p.r_knots, r);
  const std::size_t j = detail::cell_index(p.t_knots, t);
  const double a = (r - p.r_knots[i]) / (p.r_knots[i + 1] - p.r_knots[i]);
  const double b = (t - p.t_knots[j]) / (p.t_knots[j + 1] - p.t_knots[j]);

  return (1.0 - a) * (1.0 - b) * f(i, j) + a * (1.0 - b) * f(i + 1, j) +
         (1.0 - a) * b * f(i, j + 1) + a * b * f(i + 1, j + 1);
}

/// Second-order finite-difference partials of a grid field: central stencils
/// at interior nodes, one-sided three-point stencils at boundary nodes, with
/// non-uniform spacing handled by local quadratic fits. Exact for fields
/// quadratic in each variable. Falls back to two-point differences when a
/// direction has only two knots.
template <class T>
std::pair<Grid<T>, Grid<T>> finite_difference_partials(const Grid<T>& f, const GridPartition& p) {
  if (!f.same_shape(p.m(), p.n()))
    throw std::invalid_argument("finite_difference_partials: grid dimensions do not match partition");
  const std::size_t m = p.m(), n = p.n();
  Grid<T> dr(m, n), dt(m, n);

  const auto& rk = p.r_knots;
  const auto& tk = p.t_knots;

  auto stencil_base = [](std::size_t i, std::size_t count) -> std::size_t {
    if (i == 0) return 0;
    if (i == count - 1) return count - 3;
    return i - 1;
  };

  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < m; ++i) {
      if (m == 2) {
        dr(i, j) = (f(1, j) - f(0, j)) / (rk[1] - rk[0]);
      } else {
        const std::size_t b = stencil_base(i, m);
        const auto w = detail::deriv3_weights(rk[b], rk[b + 1], rk[b + 2], rk[i]);
        dr(i, j) = w[0] * f(b, j) + w[1] * f(b + 1, j) + w[2] * f(b + 2, j);
      }
      if (n == 2) {
        dt(i, j) = (f(i, 1) - f(i, 0)) / (tk[1] - tk[0]);
      } else {
        const std::size_t b = stencil_base(j, n);
        const auto w = detail::deriv3_weights(tk[b], tk[b + 1], tk[b + 2], tk[j]);
        dt(i, j) = w[0] * f(i, b) + w[1] * f(i, b + 1) + w[2] * f(i, b + 2);
      }
    }
  }
  return {std::move(dr), std::move(dt)};
}

}  // namespace surfreg
