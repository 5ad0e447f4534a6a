#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <utility>
#include <vector>

#include "parlstance/error.hpp"

namespace parlstance {

struct LowessConfig {
  double bandwidth = 0.5;               // fraction of points in each local fit
  std::size_t robustness_iterations = 0;
  std::size_t min_cell_size = 50;       // used by the uncertainty analysis

  void validate() const {
    if (!(bandwidth > 0.0 && bandwidth <= 1.0)) throw ArgumentError("LOWESS bandwidth must lie in (0, 1]");
    if (min_cell_size < 1) throw ArgumentError("min_cell_size must be at least 1");
  }
};

struct Point {
  double x = 0.0;
  double y = 0.0;
};

namespace detail {

inline double tricube(double u) {
  if (u >= 1.0) return 0.0;
  double t = 1.0 - u * u * u;
  return t * t * t;
}

inline double bisquare(double u) {
  if (std::abs(u) >= 1.0) return 0.0;
  double t = 1.0 - u * u;
  return t * t;
}

inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace detail

/// Locally weighted linear regression evaluated at each input x.
///
/// For target x_i the neighbourhood size is r = ceil(f * n) (at least 2);
/// h is the r-th smallest distance |x_j - x_i|, and point j receives the
/// tricube weight of |x_j - x_i| / h (zero at and beyond h). When every
/// neighbour sits at distance 0, all of them get weight 1. A weighted
/// least-squares line is fitted and evaluated at x_i; if the weighted x
/// spread vanishes the weighted mean is used. Robustness iterations
/// multiply the weights by the bisquare of residual / (6 * median |residual|);
/// a point whose neighbours all drop to zero weight keeps its earlier fit.
inline std::vector<double> lowess(std::span<const Point> points, const LowessConfig& cfg = {}) {
  cfg.validate();
  const std::size_t n = points.size();
  if (n < 2) throw ArgumentError("LOWESS needs at least 2 points");
  bool distinct = false;
  for (const auto& p : points)
    if (p.x != points.front().x) distinct = true;
  if (!distinct) throw ArgumentError("LOWESS needs at least two distinct x values");

  const auto r = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::ceil(cfg.bandwidth * static_cast<double>(n) - 1e-12)), 2, n);
  std::vector<double> robust(n, 1.0);
  std::vector<double> fitted(n, 0.0);
  std::vector<double> dist(n);
  std::vector<double> sorted(n);

  for (std::size_t iter = 0; iter <= cfg.robustness_iterations; ++iter) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) dist[j] = std::abs(points[j].x - points[i].x);
      sorted = dist;
      std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(r - 1), sorted.end());
      double h = sorted[r - 1];

      double sw = 0.0, sx = 0.0, sy = 0.0;
      std::vector<double> w(n, 0.0);
      for (std::size_t j = 0; j < n; ++j) {
        double k = h > 0.0 ? detail::tricube(dist[j] / h) : (dist[j] == 0.0 ? 1.0 : 0.0);
        w[j] = k * robust[j];
        sw += w[j];
        sx += w[j] * points[j].x;
        sy += w[j] * points[j].y;
      }
      // all neighbours down-weighted to zero: keep the previous pass's fit
      if (sw <= 0.0) continue;
      double xm = sx / sw;
      double ym = sy / sw;
      double sxx = 0.0, sxy = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        double dx = points[j].x - xm;
        sxx += w[j] * dx * dx;
        sxy += w[j] * dx * (points[j].y - ym);
      }
      double scale = std::max(1.0, std::abs(xm));
      if (sxx <= 1e-12 * scale * scale * sw)
        fitted[i] = ym;
      else
        fitted[i] = ym + (sxy / sxx) * (points[i].x - xm);
    }

    if (iter == cfg.robustness_iterations) break;
    std::vector<double> abs_res(n);
    for (std::size_t j = 0; j < n; ++j) abs_res[j] = std::abs(points[j].y - fitted[j]);
    double s = detail::median(abs_res);
    if (s <= 0.0) break;
    for (std::size_t j = 0; j < n; ++j) robust[j] = detail::bisquare(abs_res[j] / (6.0 * s));
  }
  return fitted;
}

}  // namespace parlstance
