#pragma once

// Sample moments with jackknife errors, Kolmogorov-Smirnov distance against a
// fully specified Gaussian, Wick moment checks and monotone-trend verdicts.
// Every routine sorts a copy of its input first, so results are exactly
// invariant under permutation of the samples.

#include "kpzlab/errors.hpp"
#include "kpzlab/theory.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace kpzlab {

struct Jackknifed {
  double value = 0.0;
  double se = 0.0;
};

struct MomentReport {
  std::size_t n = 0;
  Jackknifed mean;
  Jackknifed variance;  ///< unbiased
  Jackknifed skewness;  ///< mu3 / mu2^(3/2)
  Jackknifed excess_kurtosis;  ///< mu4 / mu2^2 - 3
  double ks_distance = 0.0;
  double ks_threshold_at_1pct = 0.0;
};

namespace detail {

// Power sums of d = x - shift, used to form leave-one-out moments in O(n).
struct PowerSums {
  double s1 = 0.0, s2 = 0.0, s3 = 0.0, s4 = 0.0;
  double n = 0.0;

  void add(double d, double sign = 1.0) {
    const double d2 = d * d;
    s1 += sign * d;
    s2 += sign * d2;
    s3 += sign * d2 * d;
    s4 += sign * d2 * d2;
    n += sign;
  }
};

struct Central {
  double mean;  // relative to the shift
  double m2, m3, m4;  // biased central moments
};

inline Central central(const PowerSums& p) {
  const double a = p.s1 / p.n;
  const double b = p.s2 / p.n;
  const double c = p.s3 / p.n;
  const double d = p.s4 / p.n;
  Central out;
  out.mean = a;
  out.m2 = std::max(0.0, b - a * a);
  out.m3 = c - 3.0 * a * b + 2.0 * a * a * a;
  out.m4 = std::max(0.0, d - 4.0 * a * c + 6.0 * a * a * b - 3.0 * a * a * a * a);
  return out;
}

inline std::vector<double> sorted_copy(std::span<const double> v) {
  std::vector<double> s(v.begin(), v.end());
  std::sort(s.begin(), s.end());
  return s;
}

inline double sorted_mean(const std::vector<double>& s) {
  double acc = 0.0;
  for (double x : s) acc += x;
  return acc / static_cast<double>(s.size());
}

// Jackknife standard error from the leave-one-out values `loo`; the point
// estimate stays the full-sample value.
inline Jackknifed jackknife(double full, const std::vector<double>& loo) {
  const double n = static_cast<double>(loo.size());
  double mean = 0.0;
  for (double v : loo) mean += v;
  mean /= n;
  double ss = 0.0;
  for (double v : loo) ss += (v - mean) * (v - mean);
  return {full, std::sqrt((n - 1.0) / n * ss)};
}

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

}  // namespace detail

/// Largest gap between the empirical CDF and N(ref_mean, ref_var); for
/// ref_var == 0 the largest deviation from ref_mean instead.
inline double ks_distance(std::span<const double> samples, double ref_mean, double ref_var) {
  if (samples.empty()) fail(ErrorKind::domain, "ks_distance needs at least one sample");
  if (!(ref_var >= 0.0)) fail(ErrorKind::domain, "ref_var must be non-negative");
  const auto s = detail::sorted_copy(samples);
  if (ref_var == 0.0) {
    return std::max(std::abs(s.front() - ref_mean), std::abs(s.back() - ref_mean));
  }
  const double sd = std::sqrt(ref_var);
  const double n = static_cast<double>(s.size());
  double d = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double f = detail::normal_cdf((s[i] - ref_mean) / sd);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

/// Asymptotic 1% critical value of the one-sample KS statistic.
inline double ks_threshold_1pct(std::size_t n) { return 1.628 / std::sqrt(static_cast<double>(n)); }

inline MomentReport moment_report(std::span<const double> samples, std::optional<double> ref_mean = {},
                                  std::optional<double> ref_var = {}) {
  if (samples.size() < 8) fail(ErrorKind::domain, "moment_report requires at least 8 samples");
  const auto s = detail::sorted_copy(samples);
  const double shift = detail::sorted_mean(s);
  detail::PowerSums all;
  for (double x : s) all.add(x - shift);
  auto stats = [](const detail::PowerSums& p) {
    const detail::Central c = detail::central(p);
    const double var = c.m2 * p.n / (p.n - 1.0);
    const double skew = c.m2 > 0.0 ? c.m3 / std::pow(c.m2, 1.5) : 0.0;
    const double kurt = c.m2 > 0.0 ? c.m4 / (c.m2 * c.m2) - 3.0 : 0.0;
    return std::array<double, 4>{c.mean, var, skew, kurt};
  };

  const auto full = stats(all);
  std::array<std::vector<double>, 4> loo;
  for (auto& v : loo) v.resize(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    detail::PowerSums p = all;
    p.add(s[i] - shift, -1.0);
    const auto st = stats(p);
    for (int k = 0; k < 4; ++k) loo[k][i] = st[k];
  }

  MomentReport r;
  r.n = s.size();
  r.mean = detail::jackknife(full[0] + shift, loo[0]);
  r.variance = detail::jackknife(full[1], loo[1]);
  r.skewness = detail::jackknife(full[2], loo[2]);
  r.excess_kurtosis = detail::jackknife(full[3], loo[3]);
  r.ks_threshold_at_1pct = ks_threshold_1pct(s.size());
  if (ref_mean && ref_var) r.ks_distance = ks_distance(s, *ref_mean, *ref_var);
  return r;
}

struct WickCheck {
  double sigma_sq = 0.0;
  Jackknifed m3;  ///< centred third sample moment
  Jackknifed m4;  ///< centred fourth sample moment
  double target3 = 0.0;
  double target4 = 0.0;
  /// (moment - target) / se; zero when both the discrepancy and se vanish.
  double z3 = 0.0;
  double z4 = 0.0;

  bool within(double k) const { return std::abs(z3) <= k && std::abs(z4) <= k; }
};

inline WickCheck wick_check(std::span<const double> samples, double sigma_sq) {
  if (samples.size() < 100) fail(ErrorKind::domain, "wick_check requires at least 100 samples");
  const auto s = detail::sorted_copy(samples);
  const double shift = detail::sorted_mean(s);
  detail::PowerSums all;
  for (double x : s) all.add(x - shift);
  std::vector<double> l3(s.size()), l4(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    detail::PowerSums p = all;
    p.add(s[i] - shift, -1.0);
    const auto c = detail::central(p);
    l3[i] = c.m3;
    l4[i] = c.m4;
  }
  const auto c = detail::central(all);
  WickCheck w;
  w.sigma_sq = sigma_sq;
  w.m3 = detail::jackknife(c.m3, l3);
  w.m4 = detail::jackknife(c.m4, l4);
  w.target3 = wick_moment(3, sigma_sq);
  w.target4 = wick_moment(4, sigma_sq);
  auto z = [](double v, double target, double se) {
    const double d = v - target;
    if (d == 0.0) return 0.0;
    return se > 0.0 ? d / se : std::copysign(HUGE_VAL, d);
  };
  w.z3 = z(w.m3.value, w.target3, w.m3.se);
  w.z4 = z(w.m4.value, w.target4, w.m4.se);
  return w;
}

/// Unbiased covariance of paired samples with its jackknife error.
inline Jackknifed covariance(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 3) fail(ErrorKind::domain, "covariance needs >= 3 paired samples");
  const std::size_t n = x.size();
  // Pairs sorted by (x, y) keep the result independent of sample order.
  std::vector<std::pair<double, double>> p(n);
  for (std::size_t i = 0; i < n; ++i) p[i] = {x[i], y[i]};
  std::sort(p.begin(), p.end());
  double sx = 0.0, sy = 0.0;
  for (const auto& [a, b] : p) {
    sx += a;
    sy += b;
  }
  const double mx = sx / static_cast<double>(n);
  const double my = sy / static_cast<double>(n);
  double s1x = 0.0, s1y = 0.0, sxy = 0.0;
  for (const auto& [a, b] : p) {
    s1x += a - mx;
    s1y += b - my;
    sxy += (a - mx) * (b - my);
  }
  auto cov = [](double cx, double cy, double cxy, double m) { return (cxy - cx * cy / m) / (m - 1.0); };
  const double full = cov(s1x, s1y, sxy, static_cast<double>(n));
  std::vector<double> loo(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = p[i].first - mx;
    const double dy = p[i].second - my;
    loo[i] = cov(s1x - dx, s1y - dy, sxy - dx * dy, static_cast<double>(n - 1));
  }
  return detail::jackknife(full, loo);
}

struct TrendVerdict {
  bool monotone = true;
  std::size_t violated_at = 0;  ///< first offending index when !monotone

  std::string describe() const {
    return monotone ? "monotone_nonincreasing" : "violated(" + std::to_string(violated_at) + ")";
  }
};

/// values[i] <= values[i-1] + slack for every i; with `strict`, values[i] < values[i-1] + slack.
inline TrendVerdict trend_test(std::span<const double> values, double slack = 0.0, bool strict = false) {
  if (values.size() < 2) fail(ErrorKind::domain, "trend_test needs at least 2 values");
  for (std::size_t i = 1; i < values.size(); ++i) {
    const double bound = values[i - 1] + slack;
    if (strict ? !(values[i] < bound) : !(values[i] <= bound)) return {false, i};
  }
  return {};
}

}  // namespace kpzlab
