#pragma once

// Serialisation of sample sets, moment reports and run manifests. Sample and
// report files contain no timestamps, so rerunning a manifest reproduces them
// byte for byte; timestamps live only in the manifest.

#include "kpzlab/averaging.hpp"
#include "kpzlab/io.hpp"
#include "kpzlab/stats.hpp"

#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#ifndef KPZLAB_VERSION
#define KPZLAB_VERSION "0.1.0"
#endif

namespace kpzlab {

inline std::string samples_csv(const SampleSet& s) {
  std::ostringstream os;
  os << "replica_id,seed," << s.statistic_id << '\n';
  for (std::size_t i = 0; i < s.values.size(); ++i) {
    os << s.replica_ids[i] << ',' << s.seeds[i] << ',' << format_double(s.values[i]) << '\n';
  }
  return os.str();
}

/// Inverse of samples_csv. statistic_id comes from the header.
inline SampleSet parse_samples_csv(const std::string& text) {
  SampleSet s;
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || !line.starts_with("replica_id,seed,")) {
    fail(ErrorKind::io, "sample CSV lacks the replica_id,seed,<statistic> header");
  }
  s.statistic_id = line.substr(16);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto a = line.find(',');
    const auto b = line.find(',', a + 1);
    if (a == std::string::npos || b == std::string::npos) fail(ErrorKind::io, "malformed sample row: " + line);
    try {
      s.replica_ids.push_back(std::stoull(line.substr(0, a)));
      s.seeds.push_back(std::stoull(line.substr(a + 1, b - a - 1)));
      s.values.push_back(std::stod(line.substr(b + 1)));
    } catch (const std::exception&) {
      fail(ErrorKind::io, "malformed sample row: " + line);
    }
  }
  return s;
}

inline json to_json(const Jackknifed& j) { return {{"value", j.value}, {"se", j.se}}; }

inline json to_json(const MomentReport& m) {
  return {{"n", m.n},
          {"mean", to_json(m.mean)},
          {"variance", to_json(m.variance)},
          {"skewness", to_json(m.skewness)},
          {"excess_kurtosis", to_json(m.excess_kurtosis)},
          {"ks_distance", m.ks_distance},
          {"ks_threshold_1pct", m.ks_threshold_at_1pct}};
}

inline json to_json(const WickCheck& w) {
  return {{"sigma_sq", w.sigma_sq}, {"m3", to_json(w.m3)}, {"target3", w.target3}, {"z3", w.z3},
          {"m4", to_json(w.m4)},    {"target4", w.target4}, {"z4", w.z4}};
}

/// Moments, KS distance against the predicted law and Wick moments of a
/// sample set.
inline json sample_report(const SampleSet& s) {
  const auto& p = s.prediction;
  json j = {{"statistic", s.statistic_id}, {"eps", s.eps}, {"config_hash", s.config_hash},
            {"prediction", to_json(p)}};
  if (s.values.size() < 8) {
    j["warning"] = "fewer than 8 replicas; no moments reported";
    return j;
  }
  const MomentReport m = moment_report(s.values, p.predicted_mean, p.sigma_gamma_sq);
  j["moments"] = to_json(m);
  j["ks_pass"] = p.sigma_gamma_sq > 0.0 && m.ks_distance < m.ks_threshold_at_1pct;
  if (s.values.size() >= 100) j["wick"] = to_json(wick_check(s.values, p.sigma_gamma_sq));
  if (s.values.size() < 100) j["warning"] = "fewer than 100 replicas; errors are unreliable";
  return j;
}

struct OutputFile {
  std::filesystem::path path;
  std::string sha256;
};

/// Writes `content` under `dir` and records its digest.
inline OutputFile emit(const std::filesystem::path& dir, const std::string& name, const std::string& content) {
  const auto path = dir / name;
  write_file(path, content);
  return {path, sha256_hex(content)};
}

struct RunManifest {
  std::string command;
  std::string config_text;  ///< canonical form
  std::string config_hash;
  std::string profile;
  std::vector<std::pair<std::uint64_t, std::uint64_t>> seeds;  ///< (replica_id, seed)
  std::string started;
  std::string finished;
  std::vector<OutputFile> outputs;
  json extra = json::object();
};

inline json to_json(const RunManifest& m) {
  json seeds = json::array();
  for (const auto& [r, s] : m.seeds) seeds.push_back({{"replica_id", r}, {"seed", s}});
  json outs = json::array();
  for (const auto& o : m.outputs) outs.push_back({{"file", o.path.filename().string()}, {"sha256", o.sha256}});
  json j = {{"command", m.command},   {"code_version", KPZLAB_VERSION}, {"config", m.config_text},
            {"config_hash", m.config_hash}, {"profile", m.profile}, {"seeds", seeds},
            {"started", m.started},   {"finished", m.finished},     {"outputs", outs}};
  if (!m.extra.empty()) j["extra"] = m.extra;
  // Digest over everything except timestamps: identical runs share it.
  json key = j;
  key.erase("started");
  key.erase("finished");
  j["manifest_digest"] = sha256_hex(key.dump());
  return j;
}

struct ManifestCheck {
  std::size_t files = 0;
  std::vector<std::string> mismatches;
};

/// Recomputes the digest of every output listed in `dir`/manifest.json.
inline ManifestCheck verify_manifest(const std::filesystem::path& dir) {
  json m;
  try {
    m = json::parse(read_file(dir / "manifest.json"));
  } catch (const json::exception& e) {
    fail(ErrorKind::io, std::string("manifest.json is not valid JSON: ") + e.what());
  }
  ManifestCheck c;
  for (const auto& o : m.at("outputs")) {
    const auto file = dir / o.at("file").get<std::string>();
    ++c.files;
    if (!std::filesystem::exists(file)) {
      c.mismatches.push_back(file.filename().string() + ": missing");
    } else if (file_sha256(file) != o.at("sha256").get<std::string>()) {
      c.mismatches.push_back(file.filename().string() + ": digest differs");
    }
  }
  return c;
}

}  // namespace kpzlab
