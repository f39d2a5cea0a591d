#pragma once

#include "kpzlab/errors.hpp"
#include "kpzlab/geometry.hpp"

#include <bit>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace kpzlab {

/// Periodic n x n lattice on the torus [0, side_len)^2. Cell (i, j) is centred
/// at (i dx, j dx), so the torus midpoint is the centre of cell (n/2, n/2).
struct GridSpec {
  double side_len = 0.0;
  std::size_t n = 0;
  double dx = 0.0;
  double dt = 0.0;
  double horizon = 0.0;

  std::size_t cells() const { return n * n; }
  std::size_t index(std::size_t i, std::size_t j) const { return j * n + i; }
  Point cell_center(std::size_t i, std::size_t j) const {
    return {static_cast<double>(i) * dx, static_cast<double>(j) * dx};
  }
  Point midpoint() const { return {0.5 * side_len, 0.5 * side_len}; }

  /// Number of time steps needed to reach `t`; rejects t that is not a
  /// multiple of dt to within 1e-9.
  std::size_t steps_to(double t) const {
    const double ratio = t / dt;
    const double rounded = std::round(ratio);
    if (std::abs(rounded * dt - t) > 1e-9 || rounded < 0.0) {
      fail(ErrorKind::config_invalid,
           "time " + std::to_string(t) + " is not a multiple of dt = " + std::to_string(dt));
    }
    return static_cast<std::size_t>(rounded);
  }
};

inline GridSpec make_grid(double side_len, std::size_t n, double dt, double horizon) {
  if (!(side_len > 0.0)) fail(ErrorKind::config_invalid, "side_len must be positive");
  if (n < 4 || !std::has_single_bit(n)) fail(ErrorKind::config_invalid, "n must be a power of two >= 4");
  if (!(dt > 0.0)) fail(ErrorKind::config_invalid, "dt must be positive");
  if (!(horizon >= 0.0)) fail(ErrorKind::config_invalid, "horizon must be non-negative");
  GridSpec g;
  g.side_len = side_len;
  g.n = n;
  g.dx = side_len / static_cast<double>(n);
  g.dt = dt;
  g.horizon = horizon;
  return g;
}

/// dt such that `horizon` is an integer number of steps no longer than eps^2 / 8.
inline double default_time_step(double eps, double horizon) {
  const double target = eps * eps / 8.0;
  const double steps = std::ceil(horizon / target - 1e-12);
  return horizon / steps;
}

/// Smallest power-of-two n with side_len / n <= eps / 4.
inline std::size_t default_points_per_side(double side_len, double eps) {
  std::size_t n = 4;
  while (side_len / static_cast<double>(n) > eps / 4.0) n *= 2;
  return n;
}

/// All violated resolution and guard invariants for a run at scale eps with
/// averaging radius r_eps; empty when the grid is admissible.
inline std::vector<std::string> grid_violations(const GridSpec& g, double eps, double r_eps) {
  std::vector<std::string> out;
  if (!std::has_single_bit(g.n)) out.push_back("grid.n must be a power of two");
  if (g.dx > eps / 4.0 * (1.0 + 1e-12)) {
    out.push_back("dx = " + std::to_string(g.dx) + " exceeds eps/4 = " + std::to_string(eps / 4.0));
  }
  if (r_eps + 2.0 * eps > g.side_len / 4.0 * (1.0 + 1e-12)) {
    out.push_back("averaging radius plus mollifier guard (" + std::to_string(r_eps + 2.0 * eps) +
                  ") exceeds side_len/4 = " + std::to_string(g.side_len / 4.0));
  }
  if (g.dt > eps * eps / 8.0 * (1.0 + 1e-12)) {
    out.push_back("dt = " + std::to_string(g.dt) + " exceeds eps^2/8 = " + std::to_string(eps * eps / 8.0));
  }
  return out;
}

/// Periodic bilinear interpolation of a lattice field at an arbitrary point.
inline double bilinear(std::span<const double> field, const GridSpec& g, Point p) {
  const double fx = wrap(p.x, g.side_len) / g.dx;
  const double fy = wrap(p.y, g.side_len) / g.dx;
  const auto i0 = static_cast<std::size_t>(fx) % g.n;
  const auto j0 = static_cast<std::size_t>(fy) % g.n;
  const double tx = fx - std::floor(fx);
  const double ty = fy - std::floor(fy);
  const std::size_t i1 = (i0 + 1) % g.n;
  const std::size_t j1 = (j0 + 1) % g.n;
  return (1.0 - ty) * ((1.0 - tx) * field[g.index(i0, j0)] + tx * field[g.index(i1, j0)]) +
         ty * ((1.0 - tx) * field[g.index(i0, j1)] + tx * field[g.index(i1, j1)]);
}

inline void validate_grid(const GridSpec& g, double eps, double r_eps) {
  const auto issues = grid_violations(g, eps, r_eps);
  if (issues.empty()) return;
  std::string msg = "grid invalid:";
  for (const auto& s : issues) msg += "\n  - " + s;
  fail(ErrorKind::config_invalid, msg);
}

}  // namespace kpzlab
