#pragma once

// Experiment configuration: a flat `key = value` text format with `#`
// comments. See README for the grammar.

#include "kpzlab/errors.hpp"
#include "kpzlab/geometry.hpp"
#include "kpzlab/grid.hpp"
#include "kpzlab/initial_condition.hpp"
#include "kpzlab/io.hpp"
#include "kpzlab/mollifier.hpp"
#include "kpzlab/theory.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace kpzlab {

/// Compactly supported smooth test function g. `bump` is the standard bump
/// rescaled to radius R with unit mass; `dipole` is bump(R) - bump(R_in),
/// which has zero mass.
struct TestFunction {
  enum class Kind { none, bump, dipole };
  Kind kind = Kind::none;
  double radius = 1.0;
  double inner = 0.5;

  double support_radius() const { return kind == Kind::none ? 0.0 : radius; }

  static double unit_bump(Point d, double r) {
    const double q = norm_sq(d) / (r * r);
    if (q >= 1.0) return 0.0;
    return standard_bump_normalization() * std::exp(-1.0 / (1.0 - q)) / (r * r);
  }

  /// g(x - center).
  double operator()(Point d) const {
    switch (kind) {
      case Kind::none: return 0.0;
      case Kind::bump: return unit_bump(d, radius);
      case Kind::dipole: return unit_bump(d, radius) - unit_bump(d, inner);
    }
    return 0.0;
  }

  std::string describe() const {
    switch (kind) {
      case Kind::none: return "none";
      case Kind::bump: return "bump:" + format_double(radius);
      case Kind::dipole: return "dipole:" + format_double(radius) + "," + format_double(inner);
    }
    return "none";
  }
};

struct ExperimentConfig {
  double beta = 1.0;
  double gamma = 0.5;
  std::vector<double> eps{0.07};
  double t = 0.5;
  InitialCondition h0;
  std::string h0_spec = "zero";
  double side_len = 8.0;
  std::size_t n = 0;  ///< 0: smallest power of two with dx <= eps/4
  double dt = 0.0;    ///< 0: eps^2/8 rounded so t is a whole number of steps
  std::size_t replicas = 0;
  std::uint64_t master_seed = 1;
  std::optional<Point> center;  ///< torus midpoint when empty
  TestFunction test_function;
  std::vector<double> zetas{0.25, 0.5, 0.75};
  bool noise = true;
  std::string profile = kStandardBump;
  std::string out_dir = "out";
  unsigned workers = 1;
  bool decomposition = false;
  std::size_t paths = 100000;
  std::uint64_t path_seed = 7;

  Point center_point() const { return center.value_or(Point{0.5 * side_len, 0.5 * side_len}); }

  GridSpec grid_for(double e) const {
    const std::size_t pts = n != 0 ? n : default_points_per_side(side_len, e);
    const double step = dt != 0.0 ? dt : default_time_step(e, t);
    return make_grid(side_len, pts, step, t);
  }

  /// Every key in a fixed order; the config hash is taken over this text.
  std::string canonical() const {
    std::ostringstream os;
    auto list = [](const std::vector<double>& v) {
      std::string s;
      for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + format_double(v[i]);
      return s;
    };
    const Point c = center_point();
    os << "beta = " << format_double(beta) << '\n'
       << "gamma = " << format_double(gamma) << '\n'
       << "eps = " << list(eps) << '\n'
       << "t = " << format_double(t) << '\n'
       << "h0 = " << h0_spec << '\n'
       << "grid.side_len = " << format_double(side_len) << '\n'
       << "grid.n = " << (n ? std::to_string(n) : "auto") << '\n'
       << "grid.dt = " << (dt != 0.0 ? format_double(dt) : "auto") << '\n'
       << "replicas = " << replicas << '\n'
       << "master_seed = " << master_seed << '\n'
       << "center = " << format_double(c.x) << ',' << format_double(c.y) << '\n'
       << "test_function = " << test_function.describe() << '\n'
       << "zeta = " << list(zetas) << '\n'
       << "noise = " << (noise ? "on" : "off") << '\n'
       << "profile = " << profile << '\n'
       << "decomposition = " << (decomposition ? "on" : "off") << '\n'
       << "paths = " << paths << '\n'
       << "path_seed = " << path_seed << '\n';
    return os.str();
  }

  std::string hash() const { return sha256_hex(canonical()); }
};

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline double parse_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto* end = v.data() + v.size();
  const auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end || v.empty()) {
    fail(ErrorKind::config_invalid, "key '" + key + "': expected a number, got '" + v + "'");
  }
  return out;
}

inline std::uint64_t parse_uint(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto* end = v.data() + v.size();
  const auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end || v.empty()) {
    fail(ErrorKind::config_invalid, "key '" + key + "': expected a non-negative integer, got '" + v + "'");
  }
  return out;
}

inline bool parse_switch(const std::string& key, const std::string& v) {
  if (v == "on" || v == "true" || v == "1") return true;
  if (v == "off" || v == "false" || v == "0") return false;
  fail(ErrorKind::config_invalid, "key '" + key + "': expected on/off, got '" + v + "'");
}

inline std::vector<double> parse_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  for (const auto& item : split(v, ',')) out.push_back(parse_double(key, item));
  return out;
}

}  // namespace detail

/// n rows of n comma-separated h0 values on the torus of side `side_len`.
inline TabulatedField load_tabulated(const std::filesystem::path& path, double side_len) {
  std::istringstream in(read_file(path));
  TabulatedField tab;
  tab.side_len = side_len;
  std::string line;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    const std::string t = detail::trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto cells = detail::split(t, ',');
    if (tab.n == 0) tab.n = cells.size();
    if (cells.size() != tab.n) fail(ErrorKind::config_invalid, "tabulated h0 rows have unequal lengths");
    for (const auto& c : cells) tab.h.push_back(detail::parse_double("h0", c));
    ++rows;
  }
  if (rows != tab.n) fail(ErrorKind::config_invalid, "tabulated h0 must be square");
  return tab;
}

inline InitialCondition parse_initial_condition(const std::string& spec, double side_len,
                                                const std::filesystem::path& base_dir = {}) {
  const auto colon = spec.find(':');
  const std::string kind = detail::trim(spec.substr(0, colon));
  const std::string args = colon == std::string::npos ? "" : detail::trim(spec.substr(colon + 1));
  if (kind == "zero") return InitialCondition::zero();
  if (kind == "constant") return InitialCondition::constant(detail::parse_double("h0", args));
  if (kind == "gaussian_bump") {
    const auto v = detail::parse_list("h0", args);
    if (v.size() != 2 && v.size() != 4) {
      fail(ErrorKind::config_invalid, "gaussian_bump takes a,s0 or a,s0,cx,cy");
    }
    const Point c = v.size() == 4 ? Point{v[2], v[3]} : Point{0.5 * side_len, 0.5 * side_len};
    return InitialCondition::gaussian_bump(v[0], v[1], c);
  }
  if (kind == "tabulated") {
    std::filesystem::path p = args;
    if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
    return InitialCondition::tabulated(load_tabulated(p, side_len));
  }
  fail(ErrorKind::config_invalid, "unknown h0 kind '" + kind + "' (zero, constant, gaussian_bump, tabulated)");
}

inline TestFunction parse_test_function(const std::string& spec) {
  const auto colon = spec.find(':');
  const std::string kind = detail::trim(spec.substr(0, colon));
  TestFunction g;
  if (kind == "none") return g;
  const auto v = detail::parse_list("test_function", colon == std::string::npos ? "" : spec.substr(colon + 1));
  if (kind == "bump" && v.size() == 1) {
    g.kind = TestFunction::Kind::bump;
    g.radius = v[0];
  } else if (kind == "dipole" && v.size() == 2) {
    g.kind = TestFunction::Kind::dipole;
    g.radius = v[0];
    g.inner = v[1];
  } else {
    fail(ErrorKind::config_invalid, "test_function must be none, bump:R or dipole:R,R_in");
  }
  return g;
}

/// Parses config text; `base_dir` resolves relative tabulated paths. Unknown
/// keys are rejected.
inline ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = {}) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string t = detail::trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      fail(ErrorKind::config_invalid, "line " + std::to_string(lineno) + ": expected key = value");
    }
    kv[detail::trim(t.substr(0, eq))] = detail::trim(t.substr(eq + 1));
  }

  static const std::set<std::string> known = {
      "beta", "gamma", "eps", "t", "h0", "grid.side_len", "grid.n", "grid.dt", "replicas", "master_seed",
      "center", "test_function", "zeta", "noise", "profile", "out_dir", "workers", "decomposition", "paths",
      "path_seed"};
  for (const auto& [k, v] : kv) {
    if (!known.contains(k)) fail(ErrorKind::config_invalid, "unknown key '" + k + "'");
  }

  ExperimentConfig c;
  auto get = [&](const char* k) -> const std::string* {
    const auto it = kv.find(k);
    return it == kv.end() ? nullptr : &it->second;
  };
  if (auto v = get("beta")) c.beta = detail::parse_double("beta", *v);
  if (auto v = get("gamma")) c.gamma = detail::parse_double("gamma", *v);
  if (auto v = get("eps")) c.eps = detail::parse_list("eps", *v);
  if (auto v = get("t")) c.t = detail::parse_double("t", *v);
  if (auto v = get("grid.side_len")) c.side_len = detail::parse_double("grid.side_len", *v);
  if (auto v = get("grid.n"); v && *v != "auto") c.n = detail::parse_uint("grid.n", *v);
  if (auto v = get("grid.dt"); v && *v != "auto") c.dt = detail::parse_double("grid.dt", *v);
  if (auto v = get("replicas")) c.replicas = detail::parse_uint("replicas", *v);
  if (auto v = get("master_seed")) c.master_seed = detail::parse_uint("master_seed", *v);
  if (auto v = get("center"); v && *v != "midpoint") {
    const auto p = detail::parse_list("center", *v);
    if (p.size() != 2) fail(ErrorKind::config_invalid, "center must be x,y or midpoint");
    c.center = Point{p[0], p[1]};
  }
  if (auto v = get("test_function")) c.test_function = parse_test_function(*v);
  if (auto v = get("zeta")) c.zetas = detail::parse_list("zeta", *v);
  if (auto v = get("noise")) c.noise = detail::parse_switch("noise", *v);
  if (auto v = get("profile")) c.profile = *v;
  if (auto v = get("out_dir")) c.out_dir = *v;
  if (auto v = get("workers")) c.workers = static_cast<unsigned>(detail::parse_uint("workers", *v));
  if (auto v = get("decomposition")) c.decomposition = detail::parse_switch("decomposition", *v);
  if (auto v = get("paths")) c.paths = detail::parse_uint("paths", *v);
  if (auto v = get("path_seed")) c.path_seed = detail::parse_uint("path_seed", *v);
  if (auto v = get("h0")) {
    c.h0_spec = *v;
    c.h0 = parse_initial_condition(*v, c.side_len, base_dir);
  }
  return c;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  return parse_config(read_file(path), path.parent_path());
}

/// Every violated invariant of the configuration; empty when it is runnable.
/// Regime violations are reported through `regime` so callers can map them to
/// their own exit code.
inline std::vector<std::string> config_violations(const ExperimentConfig& c, bool* regime = nullptr) {
  std::vector<std::string> out;
  if (regime) *regime = false;
  if (!(c.beta >= 0.0)) out.push_back("beta must be non-negative");
  if (c.beta >= kCriticalBeta) {
    out.push_back("supercritical regime: beta must be below sqrt(2 pi)");
    if (regime) *regime = true;
  }
  if (!(c.gamma >= 0.0 && c.gamma <= 1.0)) out.push_back("gamma must lie in [0, 1]");
  if (c.eps.empty()) out.push_back("eps list is empty");
  for (std::size_t i = 1; i < c.eps.size(); ++i) {
    if (!(c.eps[i] < c.eps[i - 1])) out.push_back("eps list must be strictly decreasing");
  }
  if (!(c.t > 0.0)) out.push_back("t must be positive");
  if (c.replicas == 0) out.push_back("replicas must be at least 1");
  if (c.workers == 0) out.push_back("workers must be at least 1");
  if (c.gamma == 1.0 && c.side_len < 8.0) out.push_back("gamma = 1 averages over the unit disc and needs side_len >= 8");
  for (double z : c.zetas) {
    if (!(z >= 0.0 && z <= 1.0)) out.push_back("zeta values must lie in [0, 1]");
  }
  if (c.profile != kStandardBump) out.push_back("unknown profile '" + c.profile + "' (supported: standard-bump)");
  if (c.test_function.kind == TestFunction::Kind::dipole &&
      !(c.test_function.inner > 0.0 && c.test_function.inner < c.test_function.radius)) {
    out.push_back("dipole inner radius must lie in (0, R)");
  }
  if (c.n != 0 && (c.n < 4 || (c.n & (c.n - 1)) != 0)) out.push_back("grid.n must be a power of two >= 4");
  if (!(c.side_len > 0.0)) out.push_back("grid.side_len must be positive");
  if (!out.empty()) return out;

  for (double e : c.eps) {
    if (!(e > 0.0 && e < 1.0)) {
      out.push_back("eps = " + format_double(e) + " must lie in (0, 1)");
      continue;
    }
    const ScaleSet s = make_scale_set(c.beta, c.gamma, e, 1.0, c.t);
    GridSpec g;
    try {
      g = c.grid_for(e);
      g.steps_to(c.t);
    } catch (const Error& err) {
      out.push_back("eps = " + format_double(e) + ": " + err.what());
      continue;
    }
    for (const auto& v : grid_violations(g, e, s.r_eps)) out.push_back("eps = " + format_double(e) + ": " + v);
    const double g_reach = c.test_function.support_radius() + s.r_eps + 2.0 * e;
    if (c.test_function.kind != TestFunction::Kind::none && g_reach > c.side_len / 2.0) {
      out.push_back("eps = " + format_double(e) + ": test function support plus averaging radius exceeds side_len/2");
    }
    if (s.r_eps < g.dx) {
      out.push_back("eps = " + format_double(e) + ": averaging radius is below the grid spacing");
    }
  }
  return out;
}

inline void validate_config(const ExperimentConfig& c) {
  bool regime = false;
  const auto v = config_violations(c, &regime);
  if (v.empty()) return;
  std::string msg = "configuration invalid:";
  for (const auto& s : v) msg += "\n  - " + s;
  fail(regime ? ErrorKind::regime : ErrorKind::config_invalid, msg);
}

}  // namespace kpzlab
