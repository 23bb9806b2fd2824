#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace starsim {

// Monotone cubic interpolant (Fritsch-Carlson limited slopes).
// Abscissae must be strictly increasing.
class Pchip {
 public:
  Pchip() = default;
  Pchip(std::vector<double> x, std::vector<double> y);

  double operator()(double x) const;
  double derivative(double x) const;
  bool empty() const { return x_.empty(); }
  double x_front() const { return x_.front(); }
  double x_back() const { return x_.back(); }

 private:
  std::size_t interval(double x) const;
  std::vector<double> x_, y_, m_;  // m_ = limited endpoint slopes
};

// First derivative of samples on a (possibly nonuniform) strictly increasing
// grid. Three-point Lagrange stencils interior, one-sided at the ends.
std::vector<double> derivative_nonuniform(std::span<const double> coords,
                                          std::span<const double> values);

// Trapezoid rule on a shared grid.
double trapezoid(std::span<const double> x, std::span<const double> f);

// Newton divided difference D_t^order f from time levels (t0,f0) newest to
// oldest; needs order+1 levels. Returns order! * dd.
std::vector<double> divided_difference_derivative(
    std::span<const double> times, std::span<const std::vector<double>> levels,
    int order);

// Least-squares slope of y against x.
double fit_slope(std::span<const double> x, std::span<const double> y);

inline bool all_finite(std::span<const double> v) {
  for (double a : v)
    if (!std::isfinite(a)) return false;
  return true;
}

}  // namespace starsim
