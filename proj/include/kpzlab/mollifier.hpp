#pragma once

#include "kpzlab/errors.hpp"
#include "kpzlab/geometry.hpp"
#include "kpzlab/quadrature.hpp"

#include <boost/math/interpolators/cardinal_cubic_b_spline.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>
#include <vector>

namespace kpzlab {

inline constexpr const char* kStandardBump = "standard-bump";

/// Unit-scale mollifier phi together with V = phi * phi and its norms.
///
/// phi(x) = c exp(-1 / (1 - |x|^2)) on the open unit disc, c chosen so that
/// phi integrates to one. V is radial, supported in the disc of radius 2, and
/// tabulated on [0, 2] with spacing 1 / resolution.
struct MollifierProfile {
  std::string kind;
  int resolution = 0;
  /// phi sampled on the (2 resolution + 1)^2 lattice covering [-1, 1]^2,
  /// row-major with x fastest.
  std::vector<double> samples;
  double normalization = 0.0;
  double l2_norm_sq = 0.0;
  std::vector<double> v_table;
  double v_spacing = 0.0;
  std::shared_ptr<const boost::math::interpolators::cardinal_cubic_b_spline<double>> v_spline;

  /// phi as a function of |x|^2.
  double phi_r2(double r2) const {
    if (r2 >= 1.0) return 0.0;
    return normalization * std::exp(-1.0 / (1.0 - r2));
  }
  double phi(Point p) const { return phi_r2(norm_sq(p)); }

  /// phi^eps(x) = eps^-2 phi(x / eps).
  double phi_eps(Point p, double eps) const {
    return phi_r2(norm_sq(p) / (eps * eps)) / (eps * eps);
  }

  std::size_t samples_per_side() const { return 2 * static_cast<std::size_t>(resolution) + 1; }
  double sample_spacing() const { return 1.0 / resolution; }
};

namespace detail {

inline double bump_radial_moment(double power) {
  // int_0^1 exp(-power / s) ds; equals the radial integral of exp(-power/(1-r^2))
  // after s = 1 - r^2, up to the factor 1/2.
  auto f = [power](double s) { return s <= 0.0 ? 0.0 : std::exp(-power / s); };
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, 0.0, 1.0, 15, 1e-15);
}

/// V(r) = int phi(y) phi(x - y) dy with x = (r, 0), by Gauss-Legendre in |y|
/// and the trapezoid rule in the angle (smooth and periodic).
inline double v_by_quadrature(const MollifierProfile& p, double r, const GaussRule& radial,
                              int angular) {
  if (r >= 2.0) return 0.0;
  const double dtheta = kPi / angular;
  double total = 0.0;
  for (std::size_t i = 0; i < radial.nodes.size(); ++i) {
    const double rho = radial.nodes[i];
    const double phi_rho = p.phi_r2(rho * rho);
    if (phi_rho == 0.0) continue;
    double inner = 0.0;
    for (int k = 0; k <= angular; ++k) {
      const double theta = k * dtheta;
      const double dx = r - rho * std::cos(theta);
      const double dy = rho * std::sin(theta);
      const double w = (k == 0 || k == angular) ? 0.5 : 1.0;
      inner += w * p.phi_r2(dx * dx + dy * dy);
    }
    total += radial.weights[i] * rho * phi_rho * inner * dtheta;
  }
  return 2.0 * total;
}

}  // namespace detail

/// c with c * int exp(-1 / (1 - |x|^2)) dx = 1 over the unit disc.
inline double standard_bump_normalization() {
  static const double c = 1.0 / (kPi * detail::bump_radial_moment(1.0));
  return c;
}

inline MollifierProfile build_profile(const std::string& kind = kStandardBump, int resolution = 256) {
  if (kind != kStandardBump) {
    fail(ErrorKind::config_invalid,
         "unknown mollifier kind '" + kind + "'; supported kinds: " + kStandardBump);
  }
  if (resolution < 256) {
    fail(ErrorKind::domain, "mollifier resolution must be at least 256 samples per unit length");
  }
  MollifierProfile p;
  p.kind = kind;
  p.resolution = resolution;
  p.normalization = standard_bump_normalization();
  p.l2_norm_sq = p.normalization * p.normalization * kPi * detail::bump_radial_moment(2.0);

  const std::size_t side = p.samples_per_side();
  const double h = p.sample_spacing();
  p.samples.resize(side * side);
  for (std::size_t j = 0; j < side; ++j) {
    const double y = -1.0 + static_cast<double>(j) * h;
    for (std::size_t i = 0; i < side; ++i) {
      const double x = -1.0 + static_cast<double>(i) * h;
      p.samples[j * side + i] = p.phi_r2(x * x + y * y);
    }
  }

  const GaussRule radial = gauss_legendre(96, 0.0, 1.0);
  const int angular = 256;
  p.v_spacing = 1.0 / resolution;
  const std::size_t nv = 2 * static_cast<std::size_t>(resolution) + 1;
  p.v_table.resize(nv);
  for (std::size_t k = 0; k < nv; ++k) {
    p.v_table[k] = detail::v_by_quadrature(p, static_cast<double>(k) * p.v_spacing, radial, angular);
  }
  p.v_table.back() = 0.0;
  // V is flat at the origin and at the edge of its support.
  p.v_spline = std::make_shared<boost::math::interpolators::cardinal_cubic_b_spline<double>>(
      p.v_table.begin(), p.v_table.end(), 0.0, p.v_spacing, 0.0, 0.0);
  return p;
}

/// Radial evaluation of V = phi * phi.
inline double v_kernel(const MollifierProfile& profile, double r) {
  if (r < 0.0) fail(ErrorKind::domain, "v_kernel requires r >= 0");
  if (r >= 2.0) return 0.0;
  return std::max(0.0, (*profile.v_spline)(r));
}

}  // namespace kpzlab
