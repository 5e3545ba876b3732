#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

// Composite Simpson integration used as an independent oracle in tests.
namespace oracle {

inline double simpson_weight(int i, int n) {
  if (i == 0 || i == n) return 1.0;
  return (i % 2 == 1) ? 4.0 : 2.0;
}

// log of integral exp(logf(x)) dx over [a, b] with n (even) intervals.
inline double log_integral_1d(const std::function<double(double)>& logf,
                              double a, double b, int n) {
  const double h = (b - a) / n;
  std::vector<double> vals(static_cast<std::size_t>(n) + 1);
  double shift = -std::numeric_limits<double>::infinity();
  for (int i = 0; i <= n; ++i) {
    vals[static_cast<std::size_t>(i)] = logf(a + i * h);
    shift = std::max(shift, vals[static_cast<std::size_t>(i)]);
  }
  double acc = 0.0;
  for (int i = 0; i <= n; ++i)
    acc += simpson_weight(i, n) *
           std::exp(vals[static_cast<std::size_t>(i)] - shift);
  return shift + std::log(acc * h / 3.0);
}

// log of the double integral of exp(logf(x, y)) over a rectangle, composite
// Simpson in both directions.
inline double log_integral_2d(
    const std::function<double(double, double)>& logf, double ax, double bx,
    int nx, double ay, double by, int ny) {
  const double hx = (bx - ax) / nx;
  const double hy = (by - ay) / ny;
  std::vector<double> vals(static_cast<std::size_t>(nx + 1) *
                           static_cast<std::size_t>(ny + 1));
  double shift = -std::numeric_limits<double>::infinity();
  for (int i = 0; i <= nx; ++i)
    for (int j = 0; j <= ny; ++j) {
      double v = logf(ax + i * hx, ay + j * hy);
      vals[static_cast<std::size_t>(i) * (ny + 1) + j] = v;
      shift = std::max(shift, v);
    }
  double acc = 0.0;
  for (int i = 0; i <= nx; ++i)
    for (int j = 0; j <= ny; ++j)
      acc += simpson_weight(i, nx) * simpson_weight(j, ny) *
             std::exp(vals[static_cast<std::size_t>(i) * (ny + 1) + j] -
                      shift);
  return shift + std::log(acc * hx * hy / 9.0);
}

}  // namespace oracle
