#pragma once

// Counter-based random numbers (Philox4x32-10, Salmon et al., SC'11).
// Every draw is a pure function of (key, counter), so slabs and paths can be
// generated in any order and on any worker with identical results.

#include <array>
#include <cmath>
#include <cstdint>
#include <span>

namespace kpzlab {

using Counter4 = std::array<std::uint32_t, 4>;
using Key2 = std::array<std::uint32_t, 2>;

namespace detail {

inline void mulhilo32(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t product = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(product >> 32);
  lo = static_cast<std::uint32_t>(product);
}

}  // namespace detail

inline Counter4 philox4x32_10(Counter4 ctr, Key2 key) {
  constexpr std::uint32_t kM0 = 0xD2511F53u;
  constexpr std::uint32_t kM1 = 0xCD9E8D57u;
  constexpr std::uint32_t kW0 = 0x9E3779B9u;
  constexpr std::uint32_t kW1 = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    detail::mulhilo32(kM0, ctr[0], hi0, lo0);
    detail::mulhilo32(kM1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kW0;
    key[1] += kW1;
  }
  return ctr;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

/// Per-replica key derived from the master seed.
inline std::uint64_t replica_seed(std::uint64_t master_seed, std::uint64_t replica_id) {
  return splitmix64(master_seed ^ splitmix64(replica_id + 1));
}

/// Uniform on the open interval (0, 1).
inline double uniform_open(std::uint32_t bits) { return (static_cast<double>(bits) + 0.5) * 0x1p-32; }

/// Standard normal quantile, Wichura's AS 241 (PPND16), relative error ~1e-16.
/// The central branch covers 85% of draws and needs no transcendental call.
inline double normal_quantile(double p) {
  const double q = p - 0.5;
  if (std::abs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    return q *
           (((((((2509.0809287301226727 * r + 33430.575583588128105) * r + 67265.770927008700853) * r +
               45921.953931549871457) * r + 13731.693765509461125) * r + 1971.5909503065514427) * r +
             133.14166789178437745) * r + 3.387132872796366608) /
           (((((((5226.495278852545925 * r + 28729.085735721942674) * r + 39307.89580009271061) * r +
               21213.794301586595867) * r + 5394.1960214247511077) * r + 687.1870074920579083) * r +
             42.313330701600911252) * r + 1.0);
  }
  double r = q < 0.0 ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double z;
  if (r <= 5.0) {
    r -= 1.6;
    z = (((((((7.7454501427834140764e-4 * r + 0.0227238449892691845833) * r + 0.24178072517745061177) * r +
            1.27045825245236838258) * r + 3.64784832476320460504) * r + 5.7694972214606914055) * r +
          4.6303378461565452959) * r + 1.42343711074968357734) /
        (((((((1.05075007164441684324e-9 * r + 5.475938084995344946e-4) * r + 0.0151986665636164571966) * r +
            0.14810397642748007459) * r + 0.68976733498510000455) * r + 1.6763848301838038494) * r +
          2.05319162663775882187) * r + 1.0);
  } else {
    r -= 5.0;
    z = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r + 0.0012426609473880784386) * r +
            0.026532189526576123093) * r + 0.29656057182850489123) * r + 1.7848265399172913358) * r +
          5.4637849111641143699) * r + 6.6579046435011037772) /
        (((((((2.04426310338993978564e-15 * r + 1.4215117583164458887e-7) * r + 1.8463183175100546818e-5) * r +
            7.868691311456132591e-4) * r + 0.0148753612908506148525) * r + 0.13692988092273580531) * r +
          0.59983220655588793769) * r + 1.0);
  }
  return q < 0.0 ? -z : z;
}

/// Independent streams that share a key are separated by this tag.
enum class StreamTag : std::uint32_t {
  lattice_noise = 0x6e6f6973u,
  polymer_paths = 0x70617468u,
  test = 0x74657374u,
};

/// Standard normals keyed on (seed, tag, major, minor); each block of four
/// values is the normal quantile of the four words of one Philox call.
class NormalStream {
 public:
  NormalStream(std::uint64_t seed, StreamTag tag, std::uint32_t major, std::uint32_t minor)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        major_(major),
        minor_(minor),
        tag_(static_cast<std::uint32_t>(tag)) {}

  /// The four normals of block `block`.
  std::array<double, 4> block(std::uint32_t block) const {
    const Counter4 bits = philox4x32_10({block, major_, minor_, tag_}, key_);
    return {normal_quantile(uniform_open(bits[0])), normal_quantile(uniform_open(bits[1])),
            normal_quantile(uniform_open(bits[2])), normal_quantile(uniform_open(bits[3]))};
  }

  /// Fills `out` with sd * N(0, 1); element i is always the same draw.
  void fill(std::span<double> out, double sd) const {
    const std::size_t full = out.size() / 4;
    for (std::size_t b = 0; b < full; ++b) {
      const auto v = block(static_cast<std::uint32_t>(b));
      for (int k = 0; k < 4; ++k) out[4 * b + k] = sd * v[k];
    }
    if (const std::size_t rest = out.size() - 4 * full; rest > 0) {
      const auto v = block(static_cast<std::uint32_t>(full));
      for (std::size_t k = 0; k < rest; ++k) out[4 * full + k] = sd * v[k];
    }
  }

 private:
  Key2 key_;
  std::uint32_t major_;
  std::uint32_t minor_;
  std::uint32_t tag_;
};

}  // namespace kpzlab
