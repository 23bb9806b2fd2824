#include "starsim/numerics.hpp"

#include <algorithm>
#include <cassert>
#include <stdexcept>

namespace starsim {

Pchip::Pchip(std::vector<double> x, std::vector<double> y)
    : x_(std::move(x)), y_(std::move(y)) {
  const std::size_t n = x_.size();
  if (n < 2 || y_.size() != n) throw std::invalid_argument("Pchip: need >= 2 points");
  std::vector<double> h(n - 1), d(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    h[i] = x_[i + 1] - x_[i];
    if (h[i] <= 0.0) throw std::invalid_argument("Pchip: abscissae not increasing");
    d[i] = (y_[i + 1] - y_[i]) / h[i];
  }
  m_.assign(n, 0.0);
  m_[0] = d[0];
  m_[n - 1] = d[n - 2];
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (d[i - 1] * d[i] <= 0.0) {
      m_[i] = 0.0;
    } else {
      // weighted harmonic mean keeps the interpolant monotone
      const double w1 = 2.0 * h[i] + h[i - 1];
      const double w2 = h[i] + 2.0 * h[i - 1];
      m_[i] = (w1 + w2) / (w1 / d[i - 1] + w2 / d[i]);
    }
  }
  // clamp endpoint slopes (Fritsch-Carlson boundary treatment)
  auto limit_end = [](double m_end, double d_adj) {
    if (m_end * d_adj <= 0.0) return 0.0;
    if (std::fabs(m_end) > 3.0 * std::fabs(d_adj)) return 3.0 * d_adj;
    return m_end;
  };
  m_[0] = limit_end(m_[0], d[0]);
  m_[n - 1] = limit_end(m_[n - 1], d[n - 2]);
}

std::size_t Pchip::interval(double x) const {
  auto it = std::upper_bound(x_.begin(), x_.end(), x);
  std::size_t i = (it == x_.begin()) ? 0 : static_cast<std::size_t>(it - x_.begin()) - 1;
  return std::min(i, x_.size() - 2);
}

double Pchip::operator()(double x) const {
  const std::size_t i = interval(x);
  const double h = x_[i + 1] - x_[i];
  const double t = (x - x_[i]) / h;
  const double t2 = t * t, t3 = t2 * t;
  const double h00 = 2 * t3 - 3 * t2 + 1, h10 = t3 - 2 * t2 + t;
  const double h01 = -2 * t3 + 3 * t2, h11 = t3 - t2;
  return h00 * y_[i] + h * h10 * m_[i] + h01 * y_[i + 1] + h * h11 * m_[i + 1];
}

double Pchip::derivative(double x) const {
  const std::size_t i = interval(x);
  const double h = x_[i + 1] - x_[i];
  const double t = (x - x_[i]) / h;
  const double dh00 = (6 * t * t - 6 * t) / h, dh10 = 3 * t * t - 4 * t + 1;
  const double dh01 = (-6 * t * t + 6 * t) / h, dh11 = 3 * t * t - 2 * t;
  return dh00 * y_[i] + dh10 * m_[i] + dh01 * y_[i + 1] + dh11 * m_[i + 1];
}

std::vector<double> derivative_nonuniform(std::span<const double> coords,
                                          std::span<const double> values) {
  const std::size_t n = coords.size();
  assert(values.size() == n);
  std::vector<double> out(n, 0.0);
  if (n < 2) return out;
  if (n == 2) {
    out[0] = out[1] = (values[1] - values[0]) / (coords[1] - coords[0]);
    return out;
  }
  auto three_point = [&](std::size_t a, std::size_t b, std::size_t c, double at) {
    const double xa = coords[a], xb = coords[b], xc = coords[c];
    const double la = (2 * at - xb - xc) / ((xa - xb) * (xa - xc));
    const double lb = (2 * at - xa - xc) / ((xb - xa) * (xb - xc));
    const double lc = (2 * at - xa - xb) / ((xc - xa) * (xc - xb));
    return la * values[a] + lb * values[b] + lc * values[c];
  };
  out[0] = three_point(0, 1, 2, coords[0]);
  for (std::size_t i = 1; i + 1 < n; ++i) out[i] = three_point(i - 1, i, i + 1, coords[i]);
  out[n - 1] = three_point(n - 3, n - 2, n - 1, coords[n - 1]);
  return out;
}

double trapezoid(std::span<const double> x, std::span<const double> f) {
  double s = 0.0;
  for (std::size_t i = 0; i + 1 < x.size(); ++i)
    s += 0.5 * (f[i] + f[i + 1]) * (x[i + 1] - x[i]);
  return s;
}

std::vector<double> divided_difference_derivative(
    std::span<const double> times, std::span<const std::vector<double>> levels,
    int order) {
  const std::size_t k = static_cast<std::size_t>(order) + 1;
  assert(times.size() >= k && levels.size() >= k);
  const std::size_t n = levels[0].size();
  // Newton table over the k most recent levels, per component
  std::vector<std::vector<double>> col(k);
  for (std::size_t j = 0; j < k; ++j) col[j] = levels[j];
  for (std::size_t lv = 1; lv < k; ++lv) {
    for (std::size_t j = 0; j + lv < k; ++j) {
      const double dt = times[j] - times[j + lv];
      for (std::size_t i = 0; i < n; ++i)
        col[j][i] = (col[j][i] - col[j + 1][i]) / dt;
    }
  }
  double fact = 1.0;
  for (int i = 2; i <= order; ++i) fact *= i;
  std::vector<double> out = col[0];
  for (double& v : out) v *= fact;
  return out;
}

double fit_slope(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  const double denom = n * sxx - sx * sx;
  return (n * sxy - sx * sy) / denom;
}

}  // namespace starsim
