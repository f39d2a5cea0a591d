#pragma once

// Feynman-Kac path estimators in a frozen noise environment.
//
// A path takes Gaussian steps N(0, dt I) on the torus. At step j it collects
// beta_eps * I_j - beta_eps^2 Var(I_j) / 2, where I_j is the bilinear
// interpolant of slab k(j) at the path position and Var(I_j) is its exact
// variance under the environment law. With time_reversed, k(j) = T - 1 - j,
// which unrolls the solver's splitting loop:
//   u_T(x) = E_x[ prod_j F_{T-1-j}(B_j) u_0(B_T) ]
// up to the difference between the lattice and continuum heat kernels.

#include "kpzlab/deterministic.hpp"
#include "kpzlab/errors.hpp"
#include "kpzlab/geometry.hpp"
#include "kpzlab/grid.hpp"
#include "kpzlab/initial_condition.hpp"
#include "kpzlab/noise.hpp"
#include "kpzlab/rng.hpp"
#include "kpzlab/she_solver.hpp"
#include "kpzlab/theory.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace kpzlab {

struct FrozenEnvironment {
  std::vector<MollifiedSlab> slabs;
  GridSpec grid;
  ScaleSet scale;
  /// Cov(M(i, j), M(i + a, j + b)) / dt for (a, b) = (0,0), (1,0), (0,1), (1,1), (1,-1).
  std::array<double, 5> lag_cov{};

  std::size_t steps() const { return slabs.size(); }
  double duration() const { return static_cast<double>(slabs.size()) * grid.dt; }
};

/// Materialises slabs 0..steps-1 of replica `replica` exactly as the solver
/// would draw them.
inline FrozenEnvironment make_environment(const Mollifier& mollifier, const ScaleSet& scale,
                                          std::uint64_t seed, std::uint64_t replica, std::size_t steps,
                                          bool zero_noise = false) {
  FrozenEnvironment env;
  env.grid = mollifier.grid();
  env.scale = scale;
  env.lag_cov = {mollifier.covariance(0, 0), mollifier.covariance(1, 0), mollifier.covariance(0, 1),
                 mollifier.covariance(1, 1), mollifier.covariance(1, -1)};
  LatticeNoiseSource source(mollifier, seed, replica, zero_noise);
  env.slabs.resize(steps);
  for (std::size_t k = 0; k < steps; ++k) source.fill(k, env.slabs[k]);
  return env;
}

inline void check_environment(const FrozenEnvironment& env) {
  for (std::size_t k = 0; k < env.slabs.size(); ++k) {
    if (env.slabs[k].step_index != k) {
      fail(ErrorKind::config_invalid, "environment slab indices are not contiguous from 0");
    }
    if (env.slabs[k].n != env.grid.n) fail(ErrorKind::config_invalid, "environment slab has the wrong size");
  }
}

struct PathEnsembleSpec {
  std::size_t m_paths = 10000;
  std::uint64_t path_seed = 1;
  unsigned workers = 1;
  /// Endpoint z of a Brownian bridge; the free path law when empty.
  std::optional<Point> bridge;
};

struct McEstimate {
  double mean = 0.0;
  double se = 0.0;
  std::size_t m_paths = 0;
  std::string warning;
};

namespace detail {

struct StepSample {
  double value;     // bilinear interpolant of the slab
  double variance;  // its variance over the environment law, divided by dt
};

inline StepSample interpolate(const FrozenEnvironment& env, const MollifiedSlab& slab, Point p) {
  const GridSpec& g = env.grid;
  const double fx = wrap(p.x, g.side_len) / g.dx;
  const double fy = wrap(p.y, g.side_len) / g.dx;
  const auto i0 = static_cast<std::size_t>(fx) % g.n;
  const auto j0 = static_cast<std::size_t>(fy) % g.n;
  const double tx = fx - std::floor(fx);
  const double ty = fy - std::floor(fy);
  const std::size_t i1 = (i0 + 1) % g.n;
  const std::size_t j1 = (j0 + 1) % g.n;
  const double w00 = (1.0 - tx) * (1.0 - ty);
  const double w10 = tx * (1.0 - ty);
  const double w01 = (1.0 - tx) * ty;
  const double w11 = tx * ty;
  const auto& v = slab.values;
  const double value = w00 * v[g.index(i0, j0)] + w10 * v[g.index(i1, j0)] + w01 * v[g.index(i0, j1)] +
                       w11 * v[g.index(i1, j1)];
  const auto& c = env.lag_cov;
  const double variance = c[0] * (w00 * w00 + w10 * w10 + w01 * w01 + w11 * w11) +
                          2.0 * c[1] * (w00 * w10 + w01 * w11) + 2.0 * c[2] * (w00 * w01 + w10 * w11) +
                          2.0 * c[3] * w00 * w11 + 2.0 * c[4] * w10 * w01;
  return {value, variance};
}

struct PathLogWeights {
  std::vector<double> full;    // log weight over all steps
  std::vector<double> window;  // log weight over the first window_steps steps
  std::vector<Point> endpoint;
};

// Log weights of paths 0..m-1 started at x. Path p draws its increments from
// the polymer stream keyed on (path_seed, p); results land at index p.
inline PathLogWeights path_log_weights(Point x, std::size_t steps, std::size_t window_steps,
                                       const FrozenEnvironment& env, const PathEnsembleSpec& spec,
                                       bool time_reversed) {
  const std::size_t m = spec.m_paths;
  PathLogWeights out;
  out.full.resize(m);
  out.window.resize(m);
  out.endpoint.resize(m);
  const double dt = env.grid.dt;
  const double sd = std::sqrt(dt);
  const double be = env.scale.beta_eps;
  const double comp = 0.5 * be * be * dt;

  auto run_range = [&](std::size_t begin, std::size_t end) {
    std::vector<Point> path(steps + 1);
    for (std::size_t p = begin; p < end; ++p) {
      const NormalStream stream(spec.path_seed, StreamTag::polymer_paths, static_cast<std::uint32_t>(p),
                                static_cast<std::uint32_t>(p >> 32));
      // Free path from the origin, two steps per Philox block.
      path[0] = {0.0, 0.0};
      for (std::size_t j = 0; j < steps; j += 2) {
        const auto z = stream.block(static_cast<std::uint32_t>(j / 2));
        path[j + 1] = {path[j].x + sd * z[0], path[j].y + sd * z[1]};
        if (j + 2 <= steps) path[j + 2] = {path[j + 1].x + sd * z[2], path[j + 1].y + sd * z[3]};
      }
      const Point end_free = path[steps];
      for (std::size_t j = 0; j <= steps; ++j) {
        Point q = path[j];
        if (spec.bridge) {
          const double r = static_cast<double>(j) / static_cast<double>(steps);
          const Point pin = *spec.bridge - x;
          q = {q.x + r * (pin.x - end_free.x), q.y + r * (pin.y - end_free.y)};
        }
        path[j] = {x.x + q.x, x.y + q.y};
      }
      double logw = 0.0;
      for (std::size_t j = 0; j < steps; ++j) {
        if (j == window_steps) out.window[p] = logw;
        const std::size_t k = time_reversed ? steps - 1 - j : j;
        const StepSample s = interpolate(env, env.slabs[k], path[j]);
        logw += be * s.value - comp * s.variance;
      }
      if (window_steps >= steps) out.window[p] = logw;
      out.full[p] = logw;
      out.endpoint[p] = path[steps];
    }
  };

  const unsigned workers = std::max(1u, std::min<unsigned>(spec.workers, static_cast<unsigned>(m)));
  if (workers == 1) {
    run_range(0, m);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back(run_range, m * w / workers, m * (w + 1) / workers);
    }
  }
  return out;
}

// Mean and standard error of the weights, summed in sorted order so the
// result does not depend on how paths were labelled.
inline McEstimate reduce(std::vector<double> weights) {
  McEstimate est;
  est.m_paths = weights.size();
  if (weights.empty()) return est;
  std::sort(weights.begin(), weights.end());
  double sum = 0.0;
  for (double w : weights) sum += w;
  const double n = static_cast<double>(weights.size());
  est.mean = sum / n;
  double ss = 0.0;
  for (double w : weights) ss += (w - est.mean) * (w - est.mean);
  est.se = weights.size() > 1 ? std::sqrt(ss / (n - 1.0) / n) : 0.0;
  if (weights.size() < 1000) {
    est.warning = "fewer than 1000 paths; standard error is unreliable";
  }
  return est;
}

inline std::size_t horizon_steps(const FrozenEnvironment& env, double horizon) {
  check_environment(env);
  const std::size_t steps = env.grid.steps_to(horizon);
  if (steps > env.steps()) {
    fail(ErrorKind::config_invalid, "horizon " + std::to_string(horizon) + " exceeds the environment duration " +
                                        std::to_string(env.duration()));
  }
  return steps;
}

}  // namespace detail

/// E_x[exp(f(B_horizon)) Psi_horizon] in the frozen environment.
inline McEstimate estimate_psi(Point x, double horizon, const InitialCondition& f, const FrozenEnvironment& env,
                               PathEnsembleSpec spec, bool time_reversed) {
  spec.bridge.reset();
  const std::size_t steps = detail::horizon_steps(env, horizon);
  const auto lw = detail::path_log_weights(x, steps, steps, env, spec, time_reversed);
  std::vector<double> w(lw.full.size());
  for (std::size_t p = 0; p < w.size(); ++p) {
    w[p] = std::exp(lw.full[p]) * f.u0(lw.endpoint[p], env.grid.side_len);
  }
  return detail::reduce(std::move(w));
}

/// E_{0,x}^{horizon,z}[Psi_horizon]: forward paths pinned to z at the horizon.
inline McEstimate estimate_psi_bridge(Point x, Point z, double horizon, const FrozenEnvironment& env,
                                      PathEnsembleSpec spec) {
  spec.bridge = z;
  const std::size_t steps = detail::horizon_steps(env, horizon);
  if (steps == 0) fail(ErrorKind::config_invalid, "bridge horizon must be at least one step");
  const auto lw = detail::path_log_weights(x, steps, steps, env, spec, false);
  std::vector<double> w(lw.full.size());
  for (std::size_t p = 0; p < w.size(); ++p) w[p] = std::exp(lw.full[p]);
  return detail::reduce(std::move(w));
}

struct MarkovCheck {
  McEstimate free;
  double mixture = 0.0;  ///< sum_z rho_s(x, z) bridge(z) dz^2
  double mixture_se = 0.0;
  double weight_sum = 0.0;  ///< sum_z rho_s(x, z) dz^2, should be ~1
  std::size_t endpoints = 0;
  double z_score() const { return (mixture - free.mean) / std::hypot(mixture_se, free.se); }
};

/// Compares E_x[Psi_s] with the bridge mixture over endpoints z = x + (a, b) dz
/// within `reach` standard deviations of x. Each endpoint uses its own path
/// seed; `dz` defaults to the grid spacing.
inline MarkovCheck markov_identity_check(Point x, double horizon, const FrozenEnvironment& env,
                                         const PathEnsembleSpec& free_spec, std::size_t paths_per_endpoint,
                                         double dz = 0.0, double reach = 5.0) {
  MarkovCheck mc;
  mc.free = estimate_psi(x, horizon, InitialCondition::zero(), env, free_spec, false);
  if (dz <= 0.0) dz = env.grid.dx;
  const double s = horizon;
  const long half = static_cast<long>(std::ceil(reach * std::sqrt(s) / dz));
  double var = 0.0;
  std::uint64_t idx = 0;
  PathEnsembleSpec zspec = free_spec;
  zspec.m_paths = paths_per_endpoint;
  for (long b = -half; b <= half; ++b) {
    for (long a = -half; a <= half; ++a) {
      const Point off{static_cast<double>(a) * dz, static_cast<double>(b) * dz};
      const double rho = std::exp(-norm_sq(off) / (2.0 * s)) / (kTwoPi * s) * dz * dz;
      zspec.path_seed = splitmix64(free_spec.path_seed ^ splitmix64(++idx));
      const McEstimate e = estimate_psi_bridge(x, x + off, horizon, env, zspec);
      mc.mixture += rho * e.mean;
      var += rho * rho * e.se * e.se;
      mc.weight_sum += rho;
      ++mc.endpoints;
    }
  }
  mc.mixture_se = std::sqrt(var);
  return mc;
}

struct DecompositionEstimate {
  double ratio = 0.0;
  double ratio_se = 0.0;
  McEstimate numerator;
  McEstimate denominator;
  std::size_t window_steps = 0;
};

/// Number of whole steps in the terminal window eps^(2 a_eps) t, at least one.
inline std::size_t window_steps(const ScaleSet& scale, const GridSpec& grid, double t) {
  const double w = scale.window_fraction() * t / grid.dt;
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(w)));
}

/// E_x[exp(h0(B_t)) Psi_t] / E_x[Psi_window] on common time-reversed paths;
/// the window covers the last eps^(2 a_eps) fraction of noise time.
inline DecompositionEstimate decomposition_ratio(Point x, double t, const InitialCondition& h0,
                                                 const FrozenEnvironment& env, const ScaleSet& scale,
                                                 PathEnsembleSpec spec) {
  spec.bridge.reset();
  const std::size_t steps = detail::horizon_steps(env, t);
  DecompositionEstimate d;
  d.window_steps = std::min(window_steps(scale, env.grid, t), steps);
  const auto lw = detail::path_log_weights(x, steps, d.window_steps, env, spec, true);
  const std::size_t m = lw.full.size();
  std::vector<double> num(m), den(m);
  for (std::size_t p = 0; p < m; ++p) {
    num[p] = std::exp(lw.full[p]) * h0.u0(lw.endpoint[p], env.grid.side_len);
    den[p] = std::exp(lw.window[p]);
  }
  // Covariance of numerator and denominator for the delta-method error.
  double mn = 0.0, md = 0.0;
  for (std::size_t p = 0; p < m; ++p) {
    mn += num[p];
    md += den[p];
  }
  mn /= static_cast<double>(m);
  md /= static_cast<double>(m);
  double cov = 0.0;
  for (std::size_t p = 0; p < m; ++p) cov += (num[p] - mn) * (den[p] - md);
  cov /= static_cast<double>(m - 1) * static_cast<double>(m);

  d.numerator = detail::reduce(std::move(num));
  d.denominator = detail::reduce(std::move(den));
  if (std::abs(d.denominator.mean) <= 3.0 * d.denominator.se) {
    fail(ErrorKind::degenerate_denominator, "decomposition denominator is within 3 SE of zero");
  }
  d.ratio = d.numerator.mean / d.denominator.mean;
  const double rn = d.numerator.se / d.numerator.mean;
  const double rd = d.denominator.se / d.denominator.mean;
  const double rel2 = rn * rn + rd * rd - 2.0 * cov / (d.numerator.mean * d.denominator.mean);
  d.ratio_se = std::abs(d.ratio) * std::sqrt(std::max(0.0, rel2));
  return d;
}

struct LatticeDecomposition {
  double numerator = 0.0;    ///< u(t, x) from u0 = exp(h0)
  double denominator = 0.0;  ///< u over the terminal window from u = 1
  double ratio = 0.0;
  std::size_t window_steps = 0;
};

/// The same ratio with both path expectations taken exactly by the lattice
/// solver on one noise realisation: the numerator field runs from exp(h0) at
/// time 0 and the denominator field from 1 at time t - window.
inline LatticeDecomposition decomposition_ratio_lattice(Point x, double t, const InitialCondition& h0,
                                                        const Mollifier& mollifier, const ScaleSet& scale,
                                                        std::uint64_t seed, std::uint64_t replica,
                                                        bool zero_noise = false) {
  const GridSpec& g = mollifier.grid();
  const std::size_t steps = g.steps_to(t);
  LatticeDecomposition d;
  d.window_steps = std::min(window_steps(scale, g, t), steps);
  const std::size_t start = steps - d.window_steps;

  FieldState num = init_field(h0, g, scale);
  std::vector<double> den(g.cells(), 1.0);
  const HeatPropagator heat(g, g.dt);
  SpectralWorkspace ws(g.n);
  LatticeNoiseSource source(mollifier, seed, replica, zero_noise);
  MollifiedSlab slab;
  std::vector<double> factor(g.cells());
  for (std::size_t k = 0; k < steps; ++k) {
    heat.apply(num.u, ws);
    if (k >= start) heat.apply(den, ws);
    source.fill(k, slab);
    noise_factor(slab, scale.beta_eps, factor);
    bool ok = apply_factor(num.u, factor);
    if (k >= start) ok &= apply_factor(den, factor);
    if (!ok) fail(ErrorKind::numerical, "positivity lost at step " + std::to_string(k));
  }
  num.time = t;
  d.numerator = bilinear(num.u, g, x);
  d.denominator = bilinear(den, g, x);
  d.ratio = d.numerator / d.denominator;
  return d;
}

/// Relabels macroscopic (t, x) as microscopic (eps^-2 t, eps^-1 x) and back.
/// Estimators always run in macroscopic units, so going through the adapter
/// only rescales the inputs; with eps a power of two the round trip is exact.
struct MicroscopicAdapter {
  double eps = 1.0;

  Point to_micro(Point x) const { return {x.x / eps, x.y / eps}; }
  Point to_macro(Point y) const { return {y.x * eps, y.y * eps}; }
  double time_to_micro(double t) const { return t / (eps * eps); }
  double time_to_macro(double s) const { return s * eps * eps; }

  McEstimate estimate_psi(Point y, double s, const InitialCondition& f, const FrozenEnvironment& env,
                          const PathEnsembleSpec& spec, bool time_reversed) const {
    return kpzlab::estimate_psi(to_macro(y), time_to_macro(s), f, env, spec, time_reversed);
  }
};

}  // namespace kpzlab
