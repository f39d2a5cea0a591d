#pragma once

#include "kpzlab/errors.hpp"
#include "kpzlab/geometry.hpp"
#include "kpzlab/grid.hpp"

#include <cmath>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

namespace kpzlab {

/// h0 values on a periodic n x n lattice of side `side_len` (cell (i, j) at
/// (i dx, j dx)). Between nodes the profile is piecewise bilinear in
/// u0 = exp(h0), which keeps the heat evolution of u0 in closed form.
struct TabulatedField {
  std::size_t n = 0;
  double side_len = 0.0;
  std::vector<double> h;

  double dx() const { return side_len / static_cast<double>(n); }
};

/// Initial height profile h0; u0 = exp(h0) is the SHE initial datum.
struct InitialCondition {
  enum class Kind { zero, constant, gaussian_bump, tabulated };

  Kind kind = Kind::zero;
  double level = 0.0;      ///< constant: h0 = level
  double amplitude = 0.0;  ///< gaussian_bump: u0 = 1 + amplitude exp(-|x - center|^2 / (2 width_sq))
  double width_sq = 1.0;
  Point center{};
  std::shared_ptr<const TabulatedField> table;

  static InitialCondition zero() { return {}; }
  static InitialCondition constant(double c) {
    InitialCondition ic;
    ic.kind = Kind::constant;
    ic.level = c;
    return ic;
  }
  static InitialCondition gaussian_bump(double a, double s0, Point center = {}) {
    if (!(a > -1.0) || !(s0 > 0.0)) {
      fail(ErrorKind::config_invalid, "gaussian_bump requires amplitude > -1 and s0 > 0");
    }
    InitialCondition ic;
    ic.kind = Kind::gaussian_bump;
    ic.amplitude = a;
    ic.width_sq = s0;
    ic.center = center;
    return ic;
  }
  static InitialCondition tabulated(TabulatedField field) {
    if (field.n == 0 || field.h.size() != field.n * field.n || !(field.side_len > 0.0)) {
      fail(ErrorKind::config_invalid, "tabulated h0 must hold n*n values on a positive side length");
    }
    InitialCondition ic;
    ic.kind = Kind::tabulated;
    ic.table = std::make_shared<const TabulatedField>(std::move(field));
    return ic;
  }

  /// Sum over periodic images of exp(-|x - center|^2 / (2 var)); a single
  /// Gaussian on R^2 when period == 0.
  static double periodic_gaussian(Point x, Point center, double var, double period) {
    const Point d0 = x - center;
    if (period <= 0.0) return std::exp(-norm_sq(d0) / (2.0 * var));
    const Point d = min_image(d0, period);
    // Images beyond `reach` periods contribute below exp(-40).
    const int reach = static_cast<int>(std::ceil(std::sqrt(80.0 * var) / period)) + 1;
    double sum = 0.0;
    for (int b = -reach; b <= reach; ++b) {
      for (int a = -reach; a <= reach; ++a) {
        const Point s{d.x + a * period, d.y + b * period};
        sum += std::exp(-norm_sq(s) / (2.0 * var));
      }
    }
    return sum;
  }

  /// u0 = exp(h0) at x. For period > 0 the bump is periodised; tabulated
  /// profiles are always periodic with their own side length.
  double u0(Point x, double period = 0.0) const {
    switch (kind) {
      case Kind::zero: return 1.0;
      case Kind::constant: return std::exp(level);
      case Kind::gaussian_bump:
        return 1.0 + amplitude * periodic_gaussian(x, center, width_sq, period);
      case Kind::tabulated: {
        const TabulatedField& t = *table;
        const double fx = wrap(x.x, t.side_len) / t.dx();
        const double fy = wrap(x.y, t.side_len) / t.dx();
        const auto i0 = static_cast<std::size_t>(fx) % t.n;
        const auto j0 = static_cast<std::size_t>(fy) % t.n;
        const double tx = fx - std::floor(fx);
        const double ty = fy - std::floor(fy);
        const std::size_t i1 = (i0 + 1) % t.n;
        const std::size_t j1 = (j0 + 1) % t.n;
        auto e = [&](std::size_t i, std::size_t j) { return std::exp(t.h[j * t.n + i]); };
        return (1.0 - ty) * ((1.0 - tx) * e(i0, j0) + tx * e(i1, j0)) +
               ty * ((1.0 - tx) * e(i0, j1) + tx * e(i1, j1));
      }
    }
    return 1.0;
  }

  double h0(Point x, double period = 0.0) const {
    switch (kind) {
      case Kind::zero: return 0.0;
      case Kind::constant: return level;
      default: return std::log(u0(x, period));
    }
  }

  std::string describe() const {
    std::ostringstream os;
    os.precision(17);
    switch (kind) {
      case Kind::zero: os << "zero"; break;
      case Kind::constant: os << "constant:" << level; break;
      case Kind::gaussian_bump:
        os << "gaussian_bump:" << amplitude << ',' << width_sq << '@' << center.x << ',' << center.y;
        break;
      case Kind::tabulated: os << "tabulated:" << table->n << 'x' << table->n << '/' << table->side_len; break;
    }
    return os.str();
  }
};

/// Checks that h0 sampled on `grid` is bounded and has a discrete Lipschitz
/// constant (largest neighbour difference over dx) at most `lipschitz_bound`.
inline void validate_initial_condition(const InitialCondition& ic, const GridSpec& grid,
                                       double lipschitz_bound = 1e3) {
  const std::size_t n = grid.n;
  std::vector<double> h(grid.cells());
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < n; ++i) {
      h[grid.index(i, j)] = ic.h0(grid.cell_center(i, j), grid.side_len);
    }
  }
  double lip = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < n; ++i) {
      const double v = h[grid.index(i, j)];
      if (!std::isfinite(v)) fail(ErrorKind::config_invalid, "initial condition is unbounded (non-finite h0)");
      lip = std::max(lip, std::abs(h[grid.index((i + 1) % n, j)] - v));
      lip = std::max(lip, std::abs(h[grid.index(i, (j + 1) % n)] - v));
    }
  }
  lip /= grid.dx;
  if (!(lip <= lipschitz_bound)) {
    fail(ErrorKind::config_invalid, "initial condition discrete Lipschitz constant " + std::to_string(lip) +
                                        " exceeds bound " + std::to_string(lipschitz_bound));
  }
}

}  // namespace kpzlab
