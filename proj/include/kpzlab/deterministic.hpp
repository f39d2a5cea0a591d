#pragma once

// Deterministic KPZ through Hopf-Cole: hbar(t, x) = log((rho_t * exp(h0))(x)),
// rho_t the 2D heat kernel with covariance t I.

#include "kpzlab/errors.hpp"
#include "kpzlab/geometry.hpp"
#include "kpzlab/initial_condition.hpp"
#include "kpzlab/quadrature.hpp"

#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

namespace kpzlab {

namespace detail {

// E[max(z - sigma Z, 0)] for standard normal Z.
inline double smoothed_ramp(double z, double sigma) {
  const double a = z / sigma;
  return z * 0.5 * std::erfc(-a / std::numbers::sqrt2) +
         sigma * std::exp(-0.5 * a * a) / std::sqrt(2.0 * std::numbers::pi);
}

// Unit tent of half-width h convolved with N(0, sigma^2), evaluated at z.
inline double smoothed_tent(double z, double h, double sigma) {
  if (sigma == 0.0) return std::max(0.0, 1.0 - std::abs(z) / h);
  return (smoothed_ramp(z + h, sigma) - 2.0 * smoothed_ramp(z, sigma) + smoothed_ramp(z - h, sigma)) / h;
}

// Periodised 1D weights w[i] = sum_m tent((x - i dx - m L)) smoothed by rho_t.
inline std::vector<double> tent_weights(double x, const TabulatedField& tab, double t) {
  const std::size_t n = tab.n;
  const double dx = tab.dx();
  const double sigma = std::sqrt(t);
  std::vector<double> w(n, 0.0);
  const double reach = 10.0 * sigma + 2.0 * dx;
  const long lo = static_cast<long>(std::floor((x - reach) / dx));
  const long hi = static_cast<long>(std::ceil((x + reach) / dx));
  const long nl = static_cast<long>(n);
  for (long i = lo; i <= hi; ++i) {
    const double v = smoothed_tent(x - static_cast<double>(i) * dx, dx, sigma);
    if (v != 0.0) w[static_cast<std::size_t>(((i % nl) + nl) % nl)] += v;
  }
  return w;
}

}  // namespace detail

/// (rho_t * u0)(x). `period` > 0 periodises structured profiles with that
/// side length; tabulated profiles always use their own period.
inline double heat_smoothed_u0(const InitialCondition& h0, double t, Point x, double period = 0.0) {
  if (!(t >= 0.0)) fail(ErrorKind::domain, "t must be non-negative");
  switch (h0.kind) {
    case InitialCondition::Kind::zero: return 1.0;
    case InitialCondition::Kind::constant: return std::exp(h0.level);
    case InitialCondition::Kind::gaussian_bump: {
      const double s = h0.width_sq + t;
      return 1.0 + h0.amplitude * (h0.width_sq / s) *
                       InitialCondition::periodic_gaussian(x, h0.center, s, period);
    }
    case InitialCondition::Kind::tabulated: {
      const TabulatedField& tab = *h0.table;
      const auto wx = detail::tent_weights(x.x, tab, t);
      const auto wy = detail::tent_weights(x.y, tab, t);
      double acc = 0.0;
      for (std::size_t j = 0; j < tab.n; ++j) {
        if (wy[j] == 0.0) continue;
        double row = 0.0;
        for (std::size_t i = 0; i < tab.n; ++i) {
          if (wx[i] != 0.0) row += wx[i] * std::exp(tab.h[j * tab.n + i]);
        }
        acc += wy[j] * row;
      }
      return acc;
    }
  }
  return 1.0;
}

inline double solve_hbar(const InitialCondition& h0, double t, Point query, double period = 0.0) {
  const double v = heat_smoothed_u0(h0, t, query, period);
  if (!(v > 0.0) || !std::isfinite(v)) {
    fail(ErrorKind::numerical, "heat-smoothed exp(h0) is not positive at the query point");
  }
  return std::log(v);
}

struct DeterministicSolution {
  InitialCondition h0;
  double t = 0.0;
  double period = 0.0;

  double operator()(Point x) const { return solve_hbar(h0, t, x, period); }
  std::function<double(Point)> evaluator() const {
    return [self = *this](Point x) { return self(x); };
  }
};

namespace detail {
inline double polar_disc_average(const std::function<double(Point)>& f, Point center, double radius,
                                 std::size_t radial_order) {
  const auto rule = gauss_legendre(radial_order, 0.0, radius);
  const std::size_t angular = 2 * radial_order;
  const double dtheta = 2.0 * std::numbers::pi / static_cast<double>(angular);
  double acc = 0.0;
  for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
    const double r = rule.nodes[k];
    double ring = 0.0;
    for (std::size_t a = 0; a < angular; ++a) {
      const double th = (static_cast<double>(a) + 0.5) * dtheta;
      ring += f({center.x + r * std::cos(th), center.y + r * std::sin(th)});
    }
    acc += rule.weights[k] * r * ring * dtheta;
  }
  return acc / (std::numbers::pi * radius * radius);
}
}  // namespace detail

/// Disc average of hbar(t, .) by Gauss-Legendre in r and the trapezoid rule
/// in theta, doubling the order until consecutive values agree to `tol`.
inline double ball_average_hbar(const InitialCondition& h0, double t, Point center, double radius,
                                double period = 0.0, double tol = 1e-7) {
  if (!(radius > 0.0)) fail(ErrorKind::domain, "radius must be positive");
  const DeterministicSolution sol{h0, t, period};
  const std::function<double(Point)> f = sol.evaluator();
  std::size_t order = 16;
  double prev = detail::polar_disc_average(f, center, radius, order);
  // Tabulated profiles are only piecewise smooth; allow more doublings.
  const std::size_t max_order = h0.kind == InitialCondition::Kind::tabulated ? 512 : 256;
  double change = 0.0;
  while (order < max_order) {
    order *= 2;
    const double next = detail::polar_disc_average(f, center, radius, order);
    change = std::abs(next - prev);
    if (change <= tol) return next;
    prev = next;
  }
  fail(ErrorKind::numerical, "ball average did not converge; last change " + std::to_string(change));
}

}  // namespace kpzlab
