#pragma once

// Closed-form limit-law parameters for the mollified 2D KPZ equation and a
// numerical second-moment oracle for the mollified stochastic heat equation.

#include "kpzlab/errors.hpp"
#include "kpzlab/geometry.hpp"
#include "kpzlab/mollifier.hpp"

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

namespace kpzlab {

inline const double kCriticalBeta = std::sqrt(kTwoPi);

/// Every eps-derived scalar of one run.
struct ScaleSet {
  double beta = 0.0;
  double gamma = 0.0;
  double eps = 0.0;
  double phi_norm_sq = 0.0;
  double horizon = 1.0;
  double beta_eps = 0.0;  ///< beta / sqrt(log 1/eps)
  double c_eps = 0.0;     ///< beta^2 |phi|^2 / (2 eps^2 log 1/eps)
  double r_eps = 0.0;     ///< eps^(1 - gamma)
  double a_eps = 0.0;     ///< (log 1/eps)^(-1/2)
  double s_micro = 0.0;   ///< eps^(-2 (1 - a_eps)) * horizon

  /// Length of the terminal window as a fraction of the horizon, eps^(2 a_eps).
  double window_fraction() const { return std::pow(eps, 2.0 * a_eps); }
};

namespace detail {

inline void check_beta(double beta) {
  if (!std::isfinite(beta) || beta < 0.0) {
    fail(ErrorKind::domain, "beta must be a finite non-negative number");
  }
  if (beta >= kCriticalBeta) {
    fail(ErrorKind::regime, "supercritical regime: beta = " + std::to_string(beta) +
                                " is not below sqrt(2 pi)");
  }
}

inline void check_unit_interval(double v, const char* name) {
  if (!(v >= 0.0 && v <= 1.0)) {
    fail(ErrorKind::domain, std::string(name) + " must lie in [0, 1]");
  }
}

}  // namespace detail

inline ScaleSet make_scale_set(double beta, double gamma, double eps, double phi_norm_sq,
                               double horizon = 1.0) {
  detail::check_beta(beta);
  detail::check_unit_interval(gamma, "gamma");
  if (!(eps > 0.0 && eps < 1.0)) fail(ErrorKind::domain, "eps must lie in (0, 1)");
  if (!(phi_norm_sq > 0.0)) fail(ErrorKind::domain, "phi_norm_sq must be positive");
  if (!(horizon > 0.0)) fail(ErrorKind::domain, "horizon must be positive");

  const double log_inv = std::log(1.0 / eps);
  ScaleSet s;
  s.beta = beta;
  s.gamma = gamma;
  s.eps = eps;
  s.phi_norm_sq = phi_norm_sq;
  s.horizon = horizon;
  s.beta_eps = beta / std::sqrt(log_inv);
  s.c_eps = beta * beta * phi_norm_sq / (2.0 * eps * eps * log_inv);
  s.r_eps = std::pow(eps, 1.0 - gamma);
  s.a_eps = 1.0 / std::sqrt(log_inv);
  s.s_micro = std::pow(eps, -2.0 * (1.0 - s.a_eps)) * horizon;
  return s;
}

/// Limiting variance of the local average over B(x, eps^(1 - gamma)):
/// log((2 pi - beta^2 gamma) / (2 pi - beta^2)).
inline double sigma_gamma_sq(double beta, double gamma) {
  detail::check_beta(beta);
  detail::check_unit_interval(gamma, "gamma");
  const double b2 = beta * beta;
  return std::log1p(b2 * (1.0 - gamma) / (kTwoPi - b2));
}

/// Limiting mean of h for flat data: -1/2 log(2 pi / (2 pi - beta^2)).
inline double height_shift(double beta) {
  detail::check_beta(beta);
  return 0.5 * std::log1p(-beta * beta / kTwoPi);
}

/// Limiting covariance of h at two points separated by eps^(1 - zeta).
inline double cov_prediction(double beta, double zeta) {
  detail::check_beta(beta);
  detail::check_unit_interval(zeta, "zeta");
  const double b2 = beta * beta;
  return std::log1p(b2 * (1.0 - zeta) / (kTwoPi - b2));
}

/// Centred Gaussian moment E[Z^p] for Z ~ N(0, sigma_sq).
inline double wick_moment(int p, double sigma_sq) {
  if (p < 1) fail(ErrorKind::domain, "wick_moment requires p >= 1");
  if (!(sigma_sq >= 0.0)) fail(ErrorKind::domain, "wick_moment requires sigma_sq >= 0");
  if (p % 2 == 1) return 0.0;
  double pairings = 1.0;
  for (int k = p - 1; k > 1; k -= 2) pairings *= k;
  return std::pow(sigma_sq, p / 2) * pairings;
}

struct LimitPrediction {
  double sigma_gamma_sq = 0.0;
  double height_shift = 0.0;
  double deterministic_part = 0.0;
  double predicted_mean = 0.0;
};

/// `det_part` is hbar(t, x) for gamma < 1 and its unit-ball average for gamma = 1.
inline LimitPrediction predicted_limit_law(const ScaleSet& scale, double det_part) {
  LimitPrediction p;
  p.sigma_gamma_sq = sigma_gamma_sq(scale.beta, scale.gamma);
  p.height_shift = height_shift(scale.beta);
  p.deterministic_part = det_part;
  p.predicted_mean = p.height_shift + det_part;
  return p;
}

// ---------------------------------------------------------------------------
// Second-moment oracle.
//
// E[u(t,x) u(t,y)] for flat data equals m(eps^-2 t, |x - y| / (sqrt(2) eps))
// where m solves  d_tau m = 1/2 Lap m + beta_eps^2 V(sqrt(2) r) m,  m(0) = 1,
// a radial problem because V is radial. It is integrated by Crank-Nicolson on
// a sinh-stretched finite-volume grid and refined until two successive levels
// agree.

struct OracleOptions {
  double initial_spacing = 0.04;  ///< stretched-coordinate spacing at level 0
  double initial_time_step = 0.05;
  int max_level = 5;
  double stretch = 2.0;           ///< r = stretch * sinh(s / stretch)
  double reach_sigmas = 8.0;      ///< far-field cutoff, in Brownian standard deviations
};

struct SecondMoment {
  double value = 1.0;
  double error_estimate = 0.0;
  bool far_field = false;  ///< support of V unreachable; value is exactly 1
  int level = 0;
};

namespace detail {

/// Solves the radial problem on one grid and returns m(tau_max, r0).
inline double radial_second_moment(double beta_eps_sq, double tau_max, double r0,
                                   const MollifierProfile& profile, double hs, double dtau,
                                   const OracleOptions& opt) {
  const double support = std::sqrt(2.0);  // V(sqrt(2) r) = 0 for r >= sqrt(2)
  const double r_max = std::max(r0, support) + opt.reach_sigmas * std::sqrt(tau_max) + 4.0;
  const double b = opt.stretch;
  const auto n = static_cast<std::size_t>(std::ceil(b * std::asinh(r_max / b) / hs));
  auto radius = [&](double s) { return b * std::sinh(s / b); };

  std::vector<double> r(n + 1), lower(n + 1, 0.0), upper(n + 1, 0.0), diag(n + 1, 0.0);
  for (std::size_t i = 0; i <= n; ++i) r[i] = radius(static_cast<double>(i) * hs);
  for (std::size_t i = 0; i < n; ++i) {
    const double face_lo = i == 0 ? 0.0 : radius((static_cast<double>(i) - 0.5) * hs);
    const double face_hi = radius((static_cast<double>(i) + 0.5) * hs);
    const double area = 0.5 * (face_hi * face_hi - face_lo * face_lo);
    if (i > 0) lower[i] = 0.5 * face_lo / (area * (r[i] - r[i - 1]));
    upper[i] = 0.5 * face_hi / (area * (r[i + 1] - r[i]));
    const double q = beta_eps_sq * v_kernel(profile, support * r[i]);
    diag[i] = -(lower[i] + upper[i]) + q;
  }

  const auto steps = static_cast<std::size_t>(std::ceil(tau_max / dtau - 1e-9));
  const double k = tau_max / static_cast<double>(steps);
  std::vector<double> m(n + 1, 1.0), rhs(n + 1), cprime(n + 1), dprime(n + 1);
  for (std::size_t step = 0; step < steps; ++step) {
    for (std::size_t i = 0; i < n; ++i) {
      double lap = diag[i] * m[i] + upper[i] * m[i + 1];
      if (i > 0) lap += lower[i] * m[i - 1];
      rhs[i] = m[i] + 0.5 * k * lap;
    }
    // Thomas sweep for (I - k/2 L) m' = rhs with m'[n] = 1.
    for (std::size_t i = 0; i < n; ++i) {
      const double a = i > 0 ? -0.5 * k * lower[i] : 0.0;
      const double bb = 1.0 - 0.5 * k * diag[i];
      double c = -0.5 * k * upper[i];
      double d = rhs[i];
      if (i + 1 == n) {
        d -= c * 1.0;
        c = 0.0;
      }
      const double denom = i > 0 ? bb - a * cprime[i - 1] : bb;
      cprime[i] = c / denom;
      dprime[i] = (i > 0 ? d - a * dprime[i - 1] : d) / denom;
    }
    m[n] = 1.0;
    m[n - 1] = dprime[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) m[i] = dprime[i] - cprime[i] * m[i + 1];
  }

  // Cubic Lagrange interpolation in the uniform stretched coordinate.
  const double s0 = b * std::asinh(r0 / b) / hs;
  auto base = static_cast<long>(std::floor(s0)) - 1;
  base = std::clamp(base, 0L, static_cast<long>(n) - 3);
  double value = 0.0;
  for (int a = 0; a < 4; ++a) {
    double w = 1.0;
    for (int c = 0; c < 4; ++c) {
      if (c != a) w *= (s0 - static_cast<double>(base + c)) / static_cast<double>(a - c);
    }
    value += w * m[static_cast<std::size_t>(base + a)];
  }
  return value;
}

}  // namespace detail

/// E[u(t, x) u(t, y)] for u(0, .) = 1 and |x - y| = separation.
inline SecondMoment second_moment_oracle(const ScaleSet& scale, double t, double separation,
                                         const MollifierProfile& profile, double tol,
                                         const OracleOptions& opt = {}) {
  if (!(separation >= 0.0)) fail(ErrorKind::domain, "separation must be non-negative");
  if (!(tol > 0.0)) fail(ErrorKind::domain, "tol must be positive");
  if (!(t > 0.0)) fail(ErrorKind::domain, "t must be positive");

  SecondMoment out;
  const double beta_eps_sq = scale.beta_eps * scale.beta_eps;
  if (beta_eps_sq == 0.0) return out;

  const double tau_max = t / (scale.eps * scale.eps);
  const double r0 = separation / (scale.eps * std::sqrt(2.0));
  if (r0 - std::sqrt(2.0) > opt.reach_sigmas * std::sqrt(tau_max)) {
    out.far_field = true;
    return out;
  }

  double previous = std::numeric_limits<double>::quiet_NaN();
  for (int level = 0; level <= opt.max_level; ++level) {
    const double scale_down = std::ldexp(1.0, -level);
    const double current = detail::radial_second_moment(
        beta_eps_sq, tau_max, r0, profile, opt.initial_spacing * scale_down,
        opt.initial_time_step * scale_down, opt);
    if (level > 0) {
      // Second order in both spacing and time step.
      out.error_estimate = std::abs(current - previous) / 3.0;
      out.value = current + (current - previous) / 3.0;
      out.level = level;
      if (out.error_estimate < tol) return out;
    }
    previous = current;
  }
  fail(ErrorKind::oracle_resolution,
       "second-moment oracle did not reach tol " + std::to_string(tol) +
           "; achieved error estimate " + std::to_string(out.error_estimate));
}

}  // namespace kpzlab
