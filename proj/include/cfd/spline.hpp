#pragma once

#include <span>
#include <vector>

namespace cfd {

/// Natural cubic spline (zero second derivative at both ends) through
/// strictly increasing knots.
class NaturalCubicSpline {
public:
  NaturalCubicSpline(std::span<const double> x, std::span<const double> y);

  double operator()(double x) const;
  double derivative(double x) const;

  /// Points in [x_i, x_{i+1}] where the derivative vanishes.
  std::vector<double> stationary_points(std::size_t segment) const;

  std::size_t num_knots() const { return x_.size(); }
  double x_min() const { return x_.front(); }
  double x_max() const { return x_.back(); }
  /// Segment index containing x (clamped to the knot range).
  std::size_t segment_of(double x) const;

private:
  std::vector<double> x_;
  std::vector<double> y_;
  std::vector<double> m_;  // second derivatives at the knots
};

}  // namespace cfd
