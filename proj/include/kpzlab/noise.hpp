#pragma once

#include "kpzlab/errors.hpp"
#include "kpzlab/fft.hpp"
#include "kpzlab/grid.hpp"
#include "kpzlab/mollifier.hpp"
#include "kpzlab/rng.hpp"

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

namespace kpzlab {

/// One time step of cell-integrated white noise: n x n i.i.d. N(0, dt dx^2).
struct NoiseSlab {
  std::vector<double> values;
  std::size_t n = 0;
  std::uint64_t step_index = 0;
  std::uint64_t replica_id = 0;
};

/// phi^eps-smoothed noise increment sampled at the cell centres.
struct MollifiedSlab {
  std::vector<double> values;
  std::size_t n = 0;
  std::uint64_t step_index = 0;
  /// Exact per-site variance dt * v_d, v_d = sum_j phi^eps(y_j)^2 dx^2.
  double site_variance = 0.0;
};

inline void fill_noise(std::span<double> out, std::uint64_t seed, std::uint64_t replica_id,
                       std::uint64_t step_index, const GridSpec& grid) {
  NormalStream stream(seed, StreamTag::lattice_noise, static_cast<std::uint32_t>(step_index),
                      static_cast<std::uint32_t>(replica_id));
  stream.fill(out, std::sqrt(grid.dt) * grid.dx);
}

inline NoiseSlab sample_noise_slab(std::uint64_t seed, std::uint64_t replica_id,
                                   std::uint64_t step_index, const GridSpec& grid) {
  NoiseSlab slab;
  slab.n = grid.n;
  slab.step_index = step_index;
  slab.replica_id = replica_id;
  slab.values.resize(grid.cells());
  fill_noise(slab.values, seed, replica_id, step_index, grid);
  return slab;
}

/// Grid-sampled phi^eps and its circular-convolution multiplier.
class Mollifier {
 public:
  Mollifier(const MollifierProfile& profile, double eps, const GridSpec& grid)
      : grid_(grid), eps_(eps) {
    if (!(eps > 0.0)) fail(ErrorKind::domain, "eps must be positive");
    if (eps > grid.side_len / 2.0) {
      fail(ErrorKind::config_invalid, "mollifier support eps = " + std::to_string(eps) +
                                          " exceeds side_len/2 = " + std::to_string(grid.side_len / 2));
    }
    const std::size_t n = grid.n;
    kernel_.assign(n * n, 0.0);
    reach_ = static_cast<long>(std::ceil(eps / grid.dx));
    double mass = 0.0;
    for (long dj = -reach_; dj <= reach_; ++dj) {
      for (long di = -reach_; di <= reach_; ++di) {
        const Point offset{static_cast<double>(di) * grid.dx, static_cast<double>(dj) * grid.dx};
        const double w = profile.phi_eps(offset, eps);
        if (w == 0.0) continue;
        kernel_[wrap_index(dj) * n + wrap_index(di)] = w;
        mass += w;
      }
    }
    // Unit lattice mass: the Riemann sum of phi^eps is off by ~1e-3 at
    // dx = eps/4, and constants must pass through unchanged.
    mass *= grid.dx * grid.dx;
    for (double& w : kernel_) {
      w /= mass;
      norm_sq_ += w * w;
    }
    norm_sq_ *= grid.dx * grid.dx;

    SpectralWorkspace ws(n);
    std::copy(kernel_.begin(), kernel_.end(), ws.real().begin());
    ws.forward();
    // The kernel is even, so its transform is real.
    const double inv = 1.0 / static_cast<double>(n * n);
    multiplier_.resize(ws.modes());
    auto s = ws.spectrum();
    for (std::size_t k = 0; k < multiplier_.size(); ++k) multiplier_[k] = s[k].real() * inv;
  }

  const GridSpec& grid() const { return grid_; }
  double eps() const { return eps_; }
  std::span<const double> kernel() const { return kernel_; }
  std::span<const double> multiplier() const { return multiplier_; }

  /// v_d = sum_j phi^eps(y_j)^2 dx^2, the discrete analogue of |phi^eps|^2.
  double discrete_norm_sq() const { return norm_sq_; }

  /// sum_j phi^eps(y_j) phi^eps(y_j + lag) dx^2; Cov(M(x), M(x + lag)) / dt.
  double covariance(long di, long dj) const {
    const std::size_t n = grid_.n;
    double acc = 0.0;
    for (long b = -reach_; b <= reach_; ++b) {
      for (long a = -reach_; a <= reach_; ++a) {
        const double w = kernel_[wrap_index(b) * n + wrap_index(a)];
        if (w == 0.0) continue;
        acc += w * kernel_[wrap_index(b + dj) * n + wrap_index(a + di)];
      }
    }
    return acc * grid_.dx * grid_.dx;
  }

  /// out = phi^eps (*) in on the torus. `in` and `out` may alias.
  void apply(std::span<const double> in, std::span<double> out, SpectralWorkspace& ws) const {
    ws.convolve(in, std::span<const double>(multiplier_));
    auto r = ws.real();
    std::copy(r.begin(), r.end(), out.begin());
  }

  MollifiedSlab apply(const NoiseSlab& slab, SpectralWorkspace& ws) const {
    MollifiedSlab m;
    m.n = slab.n;
    m.step_index = slab.step_index;
    m.site_variance = grid_.dt * norm_sq_;
    m.values.resize(slab.values.size());
    apply(slab.values, m.values, ws);
    return m;
  }

 private:
  std::size_t wrap_index(long k) const {
    const long n = static_cast<long>(grid_.n);
    return static_cast<std::size_t>(((k % n) + n) % n);
  }

  GridSpec grid_;
  double eps_;
  long reach_ = 0;
  double norm_sq_ = 0.0;
  std::vector<double> kernel_;
  std::vector<double> multiplier_;
};

inline MollifiedSlab mollify_slab(const NoiseSlab& slab, const MollifierProfile& profile, double eps,
                                  const GridSpec& grid) {
  if (grid.dx > eps / 4.0 * (1.0 + 1e-12)) {
    fail(ErrorKind::config_invalid, "mollify_slab requires dx <= eps/4");
  }
  const Mollifier mollifier(profile, eps, grid);
  SpectralWorkspace ws(grid.n);
  return mollifier.apply(slab, ws);
}

}  // namespace kpzlab
