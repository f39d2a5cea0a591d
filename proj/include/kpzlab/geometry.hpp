#pragma once

#include <cmath>

namespace kpzlab {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

struct Point {
  double x = 0.0;
  double y = 0.0;

  friend Point operator+(Point a, Point b) { return {a.x + b.x, a.y + b.y}; }
  friend Point operator-(Point a, Point b) { return {a.x - b.x, a.y - b.y}; }
  friend Point operator*(double s, Point a) { return {s * a.x, s * a.y}; }
  friend bool operator==(Point a, Point b) = default;
};

inline double norm_sq(Point p) { return p.x * p.x + p.y * p.y; }
inline double norm(Point p) { return std::sqrt(norm_sq(p)); }

/// Representative of `v` in [-period/2, period/2).
inline double min_image(double v, double period) {
  return v - period * std::floor(v / period + 0.5);
}

inline Point min_image(Point p, double period) {
  return {min_image(p.x, period), min_image(p.y, period)};
}

/// Representative of `v` in [0, period).
inline double wrap(double v, double period) {
  double w = v - period * std::floor(v / period);
  return w >= period ? 0.0 : w;
}

}  // namespace kpzlab
