#pragma once

// Lie splitting for the mollified SHE on the torus:
//   u <- H_dt u                              (exact spectral heat semigroup)
//   u <- u exp(beta_eps M - beta_eps^2 v_d dt / 2)   (exact lognormal noise)
// Each noise substep has mean exactly one, so E u is preserved, and u stays
// positive. h = log u is the Hopf-Cole height.

#include "kpzlab/errors.hpp"
#include "kpzlab/fft.hpp"
#include "kpzlab/grid.hpp"
#include "kpzlab/initial_condition.hpp"
#include "kpzlab/noise.hpp"
#include "kpzlab/theory.hpp"

#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace kpzlab {

struct FieldState {
  std::vector<double> u;
  double time = 0.0;
  GridSpec grid;
  ScaleSet scale;
};

inline FieldState init_field(const InitialCondition& h0, const GridSpec& grid, const ScaleSet& scale) {
  validate_initial_condition(h0, grid);
  FieldState s;
  s.grid = grid;
  s.scale = scale;
  s.u.resize(grid.cells());
  const bool on_lattice = h0.kind == InitialCondition::Kind::tabulated && h0.table->n == grid.n &&
                          h0.table->side_len == grid.side_len;
  for (std::size_t j = 0; j < grid.n; ++j) {
    for (std::size_t i = 0; i < grid.n; ++i) {
      const std::size_t k = grid.index(i, j);
      s.u[k] = on_lattice ? std::exp(h0.table->h[k]) : h0.u0(grid.cell_center(i, j), grid.side_len);
    }
  }
  return s;
}

/// Fourier multiplier exp(-|k|^2 dt / 2) of the periodic heat semigroup,
/// with the 1/n^2 of the inverse transform folded in.
class HeatPropagator {
 public:
  HeatPropagator(const GridSpec& grid, double dt) : n_(grid.n) {
    const std::size_t half = n_ / 2 + 1;
    multiplier_.resize(n_ * half);
    const double k0 = kTwoPi / grid.side_len;
    const double inv = 1.0 / static_cast<double>(n_ * n_);
    for (std::size_t row = 0; row < n_; ++row) {
      const double ky = k0 * static_cast<double>(signed_mode(row, n_));
      for (std::size_t col = 0; col < half; ++col) {
        const double kx = k0 * static_cast<double>(col);
        multiplier_[row * half + col] = std::exp(-0.5 * (kx * kx + ky * ky) * dt) * inv;
      }
    }
  }

  std::span<const double> multiplier() const { return multiplier_; }

  void apply(std::span<double> u, SpectralWorkspace& ws) const {
    ws.convolve(u, std::span<const double>(multiplier_));
    auto r = ws.real();
    std::copy(r.begin(), r.end(), u.begin());
  }

 private:
  std::size_t n_;
  std::vector<double> multiplier_;
};

inline FieldState heat_step(FieldState state, double dt) {
  const HeatPropagator heat(state.grid, dt);
  SpectralWorkspace ws(state.grid.n);
  heat.apply(state.u, ws);
  state.time += dt;
  return state;
}

/// factor = exp(beta_eps M - beta_eps^2 site_variance / 2), shared by every
/// field driven by the same slab.
inline void noise_factor(const MollifiedSlab& slab, double beta_eps, std::span<double> factor) {
  const double compensator = 0.5 * beta_eps * beta_eps * slab.site_variance;
  for (std::size_t k = 0; k < factor.size(); ++k) {
    factor[k] = std::exp(beta_eps * slab.values[k] - compensator);
  }
}

/// Multiplies `u` by `factor`; returns false if any value is no longer
/// a positive finite number.
inline bool apply_factor(std::span<double> u, std::span<const double> factor) {
  bool ok = true;
  for (std::size_t k = 0; k < u.size(); ++k) {
    u[k] *= factor[k];
    ok &= (u[k] > 0.0) & (u[k] < HUGE_VAL);
  }
  return ok;
}

inline FieldState noise_step(FieldState state, const MollifiedSlab& slab) {
  if (slab.n != state.grid.n) fail(ErrorKind::config_invalid, "slab grid does not match the field");
  std::vector<double> factor(state.u.size());
  noise_factor(slab, state.scale.beta_eps, factor);
  if (!apply_factor(state.u, factor)) {
    fail(ErrorKind::numerical, "positivity lost in noise step " + std::to_string(slab.step_index));
  }
  return state;
}

/// Mollified slabs of one replica, generated on demand from
/// (seed, replica, step). `zero_noise` replaces every increment by 0.
class LatticeNoiseSource {
 public:
  LatticeNoiseSource(const Mollifier& mollifier, std::uint64_t seed, std::uint64_t replica,
                     bool zero_noise = false)
      : mollifier_(mollifier), seed_(seed), replica_(replica), zero_(zero_noise),
        ws_(mollifier.grid().n), white_(mollifier.grid().cells()) {}

  MollifiedSlab operator()(std::uint64_t step) {
    MollifiedSlab m;
    fill(step, m);
    return m;
  }

  /// Writes slab `step` into `out`, reusing its storage.
  void fill(std::uint64_t step, MollifiedSlab& out) {
    const GridSpec& g = mollifier_.grid();
    out.n = g.n;
    out.step_index = step;
    out.site_variance = g.dt * mollifier_.discrete_norm_sq();
    out.values.resize(g.cells());
    if (zero_) {
      std::fill(out.values.begin(), out.values.end(), 0.0);
      return;
    }
    fill_noise(white_, seed_, replica_, step, g);
    mollifier_.apply(white_, out.values, ws_);
  }

 private:
  const Mollifier& mollifier_;
  std::uint64_t seed_;
  std::uint64_t replica_;
  bool zero_;
  SpectralWorkspace ws_;
  std::vector<double> white_;
};

struct Observer {
  double time = 0.0;
  std::function<void(const FieldState&)> callback;
};

using NoiseSourceFn = std::function<MollifiedSlab(std::uint64_t step)>;

/// Advances `state` to `horizon` by alternating heat and noise substeps.
inline FieldState evolve(FieldState state, double horizon, const NoiseSourceFn& noise_source,
                         const std::vector<Observer>& observers = {}) {
  const GridSpec& g = state.grid;
  const std::size_t first = g.steps_to(state.time);
  const std::size_t last = g.steps_to(horizon);
  const HeatPropagator heat(g, g.dt);
  SpectralWorkspace ws(g.n);
  std::vector<double> factor(g.cells());
  for (std::size_t k = first; k < last; ++k) {
    heat.apply(state.u, ws);
    const MollifiedSlab slab = noise_source(k);
    noise_factor(slab, state.scale.beta_eps, factor);
    if (!apply_factor(state.u, factor)) {
      fail(ErrorKind::numerical, "positivity lost at step " + std::to_string(k));
    }
    state.time = static_cast<double>(k + 1) * g.dt;
    for (const auto& obs : observers) {
      if (std::abs(obs.time - state.time) < 0.5 * g.dt) obs.callback(state);
    }
  }
  return state;
}

inline std::vector<double> hopf_cole(std::span<const double> field) {
  std::vector<double> h(field.size());
  for (std::size_t k = 0; k < h.size(); ++k) {
    const double u = field[k];
    if (!(u > 0.0) || !std::isfinite(u)) {
      fail(ErrorKind::numerical, "hopf_cole requires u > 0; cell " + std::to_string(k) + " holds " +
                                     std::to_string(u));
    }
    h[k] = std::log(u);
  }
  return h;
}

inline std::vector<double> hopf_cole(const FieldState& state) { return hopf_cole(std::span<const double>(state.u)); }

}  // namespace kpzlab
