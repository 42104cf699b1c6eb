#include "cfd/spline.hpp"

#include <algorithm>
#include <cmath>

#include "cfd/config.hpp"

namespace cfd {

NaturalCubicSpline::NaturalCubicSpline(std::span<const double> x, std::span<const double> y)
    : x_(x.begin(), x.end()), y_(y.begin(), y.end()), m_(x.size(), 0.0) {
  const std::size_t n = x_.size();
  if (n != y_.size()) throw InvalidInput("spline: x and y differ in length");
  if (n < 2) throw InvalidInput("spline needs at least two knots");
  for (std::size_t i = 1; i < n; ++i)
    if (!(x_[i] > x_[i - 1])) throw InvalidInput("spline knots must be strictly increasing");
  if (n == 2) return;

  // Tridiagonal system for the interior second derivatives (Thomas algorithm).
  const std::size_t k = n - 2;
  std::vector<double> diag(k), upper(k), rhs(k);
  for (std::size_t i = 0; i < k; ++i) {
    const double h0 = x_[i + 1] - x_[i];
    const double h1 = x_[i + 2] - x_[i + 1];
    diag[i] = 2.0 * (h0 + h1);
    upper[i] = h1;
    rhs[i] = 6.0 * ((y_[i + 2] - y_[i + 1]) / h1 - (y_[i + 1] - y_[i]) / h0);
  }
  for (std::size_t i = 1; i < k; ++i) {
    const double lower = x_[i + 1] - x_[i];
    const double w = lower / diag[i - 1];
    diag[i] -= w * upper[i - 1];
    rhs[i] -= w * rhs[i - 1];
  }
  m_[k] = rhs[k - 1] / diag[k - 1];
  for (std::size_t i = k - 1; i-- > 0;) m_[i + 1] = (rhs[i] - upper[i] * m_[i + 2]) / diag[i];
}

std::size_t NaturalCubicSpline::segment_of(double x) const {
  if (x <= x_.front()) return 0;
  if (x >= x_.back()) return x_.size() - 2;
  const auto it = std::upper_bound(x_.begin(), x_.end(), x);
  return static_cast<std::size_t>(it - x_.begin()) - 1;
}

double NaturalCubicSpline::operator()(double x) const {
  const std::size_t i = segment_of(x);
  const double h = x_[i + 1] - x_[i];
  const double a = (x_[i + 1] - x) / h;
  const double b = (x - x_[i]) / h;
  return a * y_[i] + b * y_[i + 1] + ((a * a * a - a) * m_[i] + (b * b * b - b) * m_[i + 1]) * h * h / 6.0;
}

double NaturalCubicSpline::derivative(double x) const {
  const std::size_t i = segment_of(x);
  const double h = x_[i + 1] - x_[i];
  const double a = (x_[i + 1] - x) / h;
  const double b = (x - x_[i]) / h;
  return (y_[i + 1] - y_[i]) / h + ((1.0 - 3.0 * a * a) * m_[i] + (3.0 * b * b - 1.0) * m_[i + 1]) * h / 6.0;
}

std::vector<double> NaturalCubicSpline::stationary_points(std::size_t i) const {
  // With s = x - x_i the derivative is q2 s^2 + q1 s + q0.
  const double h = x_[i + 1] - x_[i];
  const double q2 = (m_[i + 1] - m_[i]) / (2.0 * h);
  const double q1 = m_[i];
  const double q0 = (y_[i + 1] - y_[i]) / h - h * (2.0 * m_[i] + m_[i + 1]) / 6.0;
  std::vector<double> roots;
  auto keep = [&](double s) {
    if (s >= 0.0 && s <= h) roots.push_back(x_[i] + s);
  };
  const double scale = std::abs(q0) + std::abs(q1) * h + std::abs(q2) * h * h;
  if (std::abs(q2) * h * h <= 1e-14 * scale) {
    if (std::abs(q1) * h > 1e-14 * scale) keep(-q0 / q1);
    return roots;
  }
  const double disc = q1 * q1 - 4.0 * q2 * q0;
  if (disc < 0.0) return roots;
  const double sq = std::sqrt(disc);
  // numerically stable pair
  const double q = -0.5 * (q1 + std::copysign(sq, q1));
  if (q != 0.0) {
    keep(q / q2);
    keep(q0 / q);
  } else {
    keep(0.0);
  }
  return roots;
}

}  // namespace cfd
