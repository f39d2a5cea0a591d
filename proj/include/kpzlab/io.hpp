#pragma once

#include "kpzlab/errors.hpp"
#include "kpzlab/grid.hpp"
#include "kpzlab/theory.hpp"

#include <json.hpp>
#include <openssl/evp.h>

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <span>
#include <sstream>
#include <string>
#include <vector>

namespace kpzlab {

using json = nlohmann::ordered_json;

inline std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (ctx == nullptr || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx, data.data(), data.size()) != 1 || EVP_DigestFinal_ex(ctx, digest, &len) != 1) {
    EVP_MD_CTX_free(ctx);
    fail(ErrorKind::io, "sha256 failed");
  }
  EVP_MD_CTX_free(ctx);
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
  return os.str();
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::io, "cannot open " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

inline void write_file(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::io, "cannot write " + path.string());
  out << content;
  if (!out) fail(ErrorKind::io, "write failed for " + path.string());
}

inline std::string file_sha256(const std::filesystem::path& path) { return sha256_hex(read_file(path)); }

/// Shortest decimal form that reads back to the same double.
inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline json to_json(const GridSpec& g) {
  return {{"side_len", g.side_len}, {"n", g.n}, {"dx", g.dx}, {"dt", g.dt}, {"horizon", g.horizon}};
}

inline json to_json(const ScaleSet& s) {
  return {{"beta", s.beta},         {"gamma", s.gamma},       {"eps", s.eps},
          {"phi_norm_sq", s.phi_norm_sq}, {"beta_eps", s.beta_eps}, {"c_eps", s.c_eps},
          {"r_eps", s.r_eps},       {"a_eps", s.a_eps},       {"s_micro", s.s_micro}};
}

inline json to_json(const LimitPrediction& p) {
  return {{"sigma_gamma_sq", p.sigma_gamma_sq},
          {"height_shift", p.height_shift},
          {"deterministic_part", p.deterministic_part},
          {"predicted_mean", p.predicted_mean}};
}

/// h-field snapshot: raw little-endian doubles (row-major, y slow) plus a JSON
/// sidecar, or a CSV of (i, j, h) rows when `csv` is set.
inline void export_snapshot(const std::filesystem::path& base, std::span<const double> h, const GridSpec& grid,
                            const ScaleSet& scale, std::uint64_t seed, double time, const std::string& profile,
                            bool csv = false) {
  std::filesystem::path data = base;
  if (csv) {
    data += ".csv";
    std::ostringstream os;
    os << "i,j,h\n";
    for (std::size_t j = 0; j < grid.n; ++j) {
      for (std::size_t i = 0; i < grid.n; ++i) os << i << ',' << j << ',' << format_double(h[grid.index(i, j)]) << '\n';
    }
    write_file(data, os.str());
  } else {
    data += ".bin";
    write_file(data, std::string_view(reinterpret_cast<const char*>(h.data()), h.size() * sizeof(double)));
  }
  json side = {{"format", csv ? "csv" : "f64-le-row-major"},
               {"data", data.filename().string()},
               {"grid", to_json(grid)},
               {"scale", to_json(scale)},
               {"profile", profile},
               {"seed", seed},
               {"time", time}};
  std::filesystem::path sidecar = base;
  sidecar += ".json";
  write_file(sidecar, side.dump(2) + "\n");
}

}  // namespace kpzlab
