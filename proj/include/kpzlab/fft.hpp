#pragma once

#include <fftw3.h>

#include <complex>
#include <cstddef>
#include <mutex>
#include <span>

namespace kpzlab {

namespace detail {
// FFTW planning is not thread-safe; execution on distinct plans is.
inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace detail

/// Owns aligned buffers and an r2c/c2r plan pair for one n x n periodic field.
/// Plans use FFTW_ESTIMATE so the chosen algorithm, and hence every rounding
/// error, is the same on every run.
class SpectralWorkspace {
 public:
  explicit SpectralWorkspace(std::size_t n) : n_(n), modes_(n * (n / 2 + 1)) {
    real_ = fftw_alloc_real(n_ * n_);
    spectrum_ = fftw_alloc_complex(modes_);
    std::lock_guard lock(detail::fftw_planner_mutex());
    const int ni = static_cast<int>(n_);
    forward_ = fftw_plan_dft_r2c_2d(ni, ni, real_, spectrum_, FFTW_ESTIMATE);
    backward_ = fftw_plan_dft_c2r_2d(ni, ni, spectrum_, real_, FFTW_ESTIMATE);
  }

  SpectralWorkspace(const SpectralWorkspace&) = delete;
  SpectralWorkspace& operator=(const SpectralWorkspace&) = delete;

  ~SpectralWorkspace() {
    std::lock_guard lock(detail::fftw_planner_mutex());
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(backward_);
    fftw_free(real_);
    fftw_free(spectrum_);
  }

  std::size_t n() const { return n_; }
  std::size_t modes() const { return modes_; }

  std::span<double> real() { return {real_, n_ * n_}; }
  std::span<std::complex<double>> spectrum() {
    return {reinterpret_cast<std::complex<double>*>(spectrum_), modes_};
  }

  /// real() -> spectrum(). Overwrites real().
  void forward() { fftw_execute(forward_); }
  /// spectrum() -> real(), unnormalised (scaled by n^2). Overwrites spectrum().
  void backward() { fftw_execute(backward_); }

  /// Circular convolution of `in` with the kernel whose spectrum (already
  /// divided by n^2) is `kernel_hat`; the result is left in real().
  void convolve(std::span<const double> in, std::span<const double> kernel_hat) {
    auto r = real();
    std::copy(in.begin(), in.end(), r.begin());
    forward();
    auto s = spectrum();
    for (std::size_t k = 0; k < modes_; ++k) s[k] *= kernel_hat[k];
    backward();
  }

  void convolve(std::span<const double> in, std::span<const std::complex<double>> kernel_hat) {
    auto r = real();
    std::copy(in.begin(), in.end(), r.begin());
    forward();
    auto s = spectrum();
    for (std::size_t k = 0; k < modes_; ++k) s[k] *= kernel_hat[k];
    backward();
  }

 private:
  std::size_t n_;
  std::size_t modes_;
  double* real_ = nullptr;
  fftw_complex* spectrum_ = nullptr;
  fftw_plan forward_ = nullptr;
  fftw_plan backward_ = nullptr;
};

/// Signed integer wavenumber index of row/column k on an n-point axis.
inline long signed_mode(std::size_t k, std::size_t n) {
  return k <= n / 2 ? static_cast<long>(k) : static_cast<long>(k) - static_cast<long>(n);
}

}  // namespace kpzlab
