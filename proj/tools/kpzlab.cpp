// kpzlab command-line runner.
//
//   kpzlab oracle --beta 1 --gamma 0.5
//   kpzlab simulate --config configs/simulate.cfg [--resume] [--workers 4]
//   kpzlab polymer-check --config configs/polymer_check.cfg
//   kpzlab sweep --config configs/sweep.cfg
//   kpzlab report --out-dir out/simulate

#include "kpzlab/averaging.hpp"
#include "kpzlab/polymer.hpp"
#include "kpzlab/report.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>

using namespace kpzlab;
namespace fs = std::filesystem;

namespace {

enum Exit : int {
  ok = 0,
  generic = 1,
  config_invalid = 2,
  regime = 3,
  numerical = 4,
  acceptance_failure = 5,
  io = 6,
};

int exit_code(ErrorKind k) {
  switch (k) {
    case ErrorKind::regime: return regime;
    case ErrorKind::config_invalid:
    case ErrorKind::domain: return config_invalid;
    case ErrorKind::numerical:
    case ErrorKind::oracle_resolution:
    case ErrorKind::degenerate_denominator: return numerical;
    case ErrorKind::io: return io;
  }
  return generic;
}

struct RunFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> workers;
  bool resume = false;
  std::string out_dir;
};

void add_run_flags(CLI::App* sub, RunFlags& f) {
  sub->add_option("--config", f.config, "experiment config file")->required()->check(CLI::ExistingFile);
  sub->add_option("--seed", f.seed, "override master_seed");
  sub->add_option("--workers", f.workers, "worker threads (overrides KPZLAB_WORKERS and the config)")
      ->check(CLI::PositiveNumber);
  sub->add_flag("--resume", f.resume, "reuse finished replicas from the checkpoint");
  sub->add_option("--out-dir", f.out_dir, "override out_dir");
}

// Precedence: flag, then KPZLAB_WORKERS, then the config file.
ExperimentConfig load_with_overrides(const RunFlags& f) {
  ExperimentConfig c = load_config(f.config);
  if (f.seed) c.master_seed = *f.seed;
  if (const char* w = std::getenv("KPZLAB_WORKERS")) {
    try {
      c.workers = static_cast<unsigned>(std::stoul(w));
    } catch (const std::exception&) {
      fail(ErrorKind::config_invalid, "KPZLAB_WORKERS must be a positive integer");
    }
  }
  if (f.workers) c.workers = *f.workers;
  if (!f.out_dir.empty()) c.out_dir = f.out_dir;
  validate_config(c);
  return c;
}

RunOptions run_options(const ExperimentConfig& c, const RunFlags& f, const fs::path& checkpoint) {
  if (!f.resume) fs::remove(checkpoint);
  RunOptions o;
  o.workers = c.workers;
  o.checkpoint = checkpoint;
  o.progress = [](std::size_t done, std::size_t total) {
    if (done == total || done % 10 == 0) std::fprintf(stderr, "\r%zu/%zu replicas", done, total);
    if (done == total) std::fputc('\n', stderr);
  };
  return o;
}

RunManifest start_manifest(const std::string& command, const ExperimentConfig& c) {
  RunManifest m;
  m.command = command;
  m.config_text = c.canonical();
  m.config_hash = c.hash();
  m.profile = c.profile;
  m.started = utc_timestamp();
  return m;
}

void finish_manifest(RunManifest& m, const fs::path& dir) {
  m.finished = utc_timestamp();
  write_file(dir / "manifest.json", to_json(m).dump(2) + "\n");
  std::printf("manifest: %s\n", (dir / "manifest.json").c_str());
}

void record_seeds(RunManifest& m, const SampleSet& s) {
  m.seeds.clear();
  for (std::size_t i = 0; i < s.seeds.size(); ++i) m.seeds.emplace_back(s.replica_ids[i], s.seeds[i]);
}

// ---- oracle -------------------------------------------------------------------

struct OracleFlags {
  double beta = 1.0;
  double gamma = 0.5;
  std::vector<double> zetas{0.25, 0.5, 0.75};
  std::optional<double> eps;
  double t = 0.5;
  std::string format = "csv";
};

int cmd_oracle(const OracleFlags& f) {
  const double s2 = sigma_gamma_sq(f.beta, f.gamma);
  const double shift = height_shift(f.beta);
  struct Row {
    std::string quantity, parameter;
    double value;
  };
  std::vector<Row> rows{{"sigma_gamma_sq", "gamma=" + format_double(f.gamma), s2},
                        {"height_shift", "", shift}};
  for (double z : f.zetas) rows.push_back({"covariance", "zeta=" + format_double(z), cov_prediction(f.beta, z)});
  for (int p = 2; p <= 4; ++p) rows.push_back({"wick_moment", "p=" + std::to_string(p), wick_moment(p, s2)});
  if (f.eps) {
    const MollifierProfile profile = build_profile();
    const ScaleSet s = make_scale_set(f.beta, f.gamma, *f.eps, profile.l2_norm_sq, f.t);
    const SecondMoment m = second_moment_oracle(s, f.t, 0.0, profile, 1e-4);
    const std::string par = "eps=" + format_double(*f.eps) + ";t=" + format_double(f.t);
    rows.push_back({"second_moment", par, m.value});
    rows.push_back({"second_moment_error", par, m.error_estimate});
  }
  if (f.format == "json") {
    json j = json::array();
    for (const auto& r : rows) j.push_back({{"quantity", r.quantity}, {"parameter", r.parameter}, {"value", r.value}});
    std::cout << j.dump(2) << '\n';
  } else {
    std::cout << "quantity,parameter,value\n";
    for (const auto& r : rows) std::cout << r.quantity << ',' << r.parameter << ',' << format_double(r.value) << '\n';
  }
  return ok;
}

// ---- simulate -----------------------------------------------------------------

int cmd_simulate(const RunFlags& f) {
  const ExperimentConfig c = load_with_overrides(f);
  if (c.replicas < 100) std::fprintf(stderr, "warning: %zu replicas; standard errors are unreliable below 100\n", c.replicas);
  const fs::path dir = c.out_dir;
  fs::create_directories(dir);
  RunManifest m = start_manifest("simulate", c);
  const auto sets = simulate_statistics(c, run_options(c, f, checkpoint_path(c, "simulate", c.eps.front())));
  record_seeds(m, sets.front());
  for (const auto& s : sets) {
    m.outputs.push_back(emit(dir, "samples_" + s.statistic_id + ".csv", samples_csv(s)));
    const json rep = sample_report(s);
    m.outputs.push_back(emit(dir, "report_" + s.statistic_id + ".json", rep.dump(2) + "\n"));
    if (rep.contains("moments")) {
      const auto& mo = rep["moments"];
      std::printf("%s: mean %.6f (+-%.6f) predicted %.6f; variance %.6f (+-%.6f) predicted %.6f; KS %.4f (1%% %.4f)\n",
                  s.statistic_id.c_str(), mo["mean"]["value"].get<double>(), mo["mean"]["se"].get<double>(),
                  s.prediction.predicted_mean, mo["variance"]["value"].get<double>(),
                  mo["variance"]["se"].get<double>(), s.prediction.sigma_gamma_sq,
                  mo["ks_distance"].get<double>(), mo["ks_threshold_1pct"].get<double>());
    }
  }
  finish_manifest(m, dir);
  return ok;
}

// ---- polymer-check ------------------------------------------------------------

int cmd_polymer_check(const RunFlags& f) {
  constexpr double kSigmas = 4.0;
  const ExperimentConfig c = load_with_overrides(f);
  const fs::path dir = c.out_dir;
  fs::create_directories(dir);
  RunManifest m = start_manifest("polymer-check", c);

  const double eps = c.eps.front();
  const MollifierProfile profile = build_profile(c.profile);
  const GridSpec g = c.grid_for(eps);
  const ScaleSet sc = make_scale_set(c.beta, c.gamma, eps, profile.l2_norm_sq, c.t);
  const Mollifier mol(profile, eps, g);
  const std::uint64_t seed = replica_seed(c.master_seed, 0);
  m.seeds.emplace_back(0, seed);
  const FrozenEnvironment env = make_environment(mol, sc, seed, 0, g.steps_to(c.t), !c.noise);
  const Point x = c.center_point();

  FieldState st = evolve(init_field(c.h0, g, sc), c.t, [&](std::uint64_t k) { return env.slabs[k]; });
  const double lattice = bilinear(st.u, g, x);
  PathEnsembleSpec spec;
  spec.m_paths = c.paths;
  spec.path_seed = c.path_seed;
  spec.workers = c.workers;
  const McEstimate fk = estimate_psi(x, c.t, c.h0, env, spec, true);
  const double z_fk = (fk.mean - lattice) / fk.se;

  const std::size_t bridge_steps = std::min<std::size_t>(10, env.steps());
  const MarkovCheck mk = markov_identity_check(x, static_cast<double>(bridge_steps) * g.dt, env, spec,
                                               std::max<std::size_t>(1000, c.paths / 100), 4.0 * g.dx);
  const double z_mk = mk.z_score();
  bool pass = std::abs(z_fk) <= kSigmas && std::abs(z_mk) <= kSigmas;

  json rep = {{"eps", eps},
              {"grid", to_json(g)},
              {"scale", to_json(sc)},
              {"feynman_kac",
               {{"lattice", lattice}, {"polymer", fk.mean}, {"polymer_se", fk.se}, {"paths", fk.m_paths}, {"z", z_fk}}},
              {"markov_identity",
               {{"horizon_steps", bridge_steps},
                {"free", mk.free.mean},
                {"free_se", mk.free.se},
                {"mixture", mk.mixture},
                {"mixture_se", mk.mixture_se},
                {"weight_sum", mk.weight_sum},
                {"endpoints", mk.endpoints},
                {"z", z_mk}}}};
  std::printf("feynman-kac: lattice %.6f polymer %.6f (+-%.6f) z=%.2f\n", lattice, fk.mean, fk.se, z_fk);
  std::printf("markov identity: free %.6f (+-%.6f) mixture %.6f (+-%.6f) z=%.2f\n", mk.free.mean, mk.free.se,
              mk.mixture, mk.mixture_se, z_mk);
  if (!fk.warning.empty()) rep["warning"] = fk.warning;

  if (c.decomposition) {
    const DecompositionEstimate d = decomposition_ratio(x, c.t, c.h0, env, sc, spec);
    const LatticeDecomposition l = decomposition_ratio_lattice(x, c.t, c.h0, mol, sc, seed, 0, !c.noise);
    const double z = (d.ratio - l.ratio) / d.ratio_se;
    pass &= std::abs(z) <= kSigmas;
    rep["decomposition"] = {{"window_steps", d.window_steps}, {"polymer_ratio", d.ratio},
                            {"polymer_ratio_se", d.ratio_se}, {"lattice_ratio", l.ratio},
                            {"log_ratio", std::log(l.ratio)}, {"z", z}};
    std::printf("decomposition: lattice %.6f polymer %.6f (+-%.6f) z=%.2f\n", l.ratio, d.ratio, d.ratio_se, z);
  }
  rep["threshold_sigmas"] = kSigmas;
  rep["pass"] = pass;
  m.outputs.push_back(emit(dir, "polymer_check.json", rep.dump(2) + "\n"));
  finish_manifest(m, dir);
  std::printf("polymer-check %s\n", pass ? "PASS" : "FAIL");
  return pass ? ok : acceptance_failure;
}

// ---- sweep --------------------------------------------------------------------

int cmd_sweep(const RunFlags& f) {
  const ExperimentConfig c = load_with_overrides(f);
  const fs::path dir = c.out_dir;
  fs::create_directories(dir);
  RunManifest m = start_manifest("sweep", c);
  if (!f.resume) {
    for (double e : c.eps) fs::remove(checkpoint_path(c, "sweep", e));
  }
  RunOptions o = run_options(c, f, checkpoint_path(c, "sweep", c.eps.front()));
  const TrendReport rep = epsilon_sweep(c, o);

  std::ostringstream table;
  table << "eps,quantity,value,se\n";
  json rows = json::array();
  for (const auto& r : rep.rows) {
    const std::string e = format_double(r.eps);
    auto put = [&](const char* q, double v, double se) {
      table << e << ',' << q << ',' << format_double(v) << ',' << format_double(se) << '\n';
    };
    put("mean", r.moments.mean.value, r.moments.mean.se);
    put("variance", r.moments.variance.value, r.moments.variance.se);
    put("skewness", r.moments.skewness.value, r.moments.skewness.se);
    put("excess_kurtosis", r.moments.excess_kurtosis.value, r.moments.excess_kurtosis.se);
    put("predicted_mean", r.prediction.predicted_mean, 0.0);
    put("predicted_variance", r.prediction.sigma_gamma_sq, 0.0);
    put("mean_gap", r.mean_gap, 0.0);
    put("variance_gap", r.var_gap, 0.0);
    put("ks_distance", r.ks, 0.0);
    m.outputs.push_back(emit(dir, "samples_local_average_eps" + e + ".csv", samples_csv(r.samples)));
    for (std::size_t i = 0; i < r.samples.seeds.size(); ++i) {
      m.seeds.emplace_back(r.samples.replica_ids[i], r.samples.seeds[i]);
    }
    std::printf("eps=%s mean %.6f var %.6f (pred %.6f) KS %.4f\n", e.c_str(), r.moments.mean.value,
                r.moments.variance.value, r.prediction.sigma_gamma_sq, r.ks);
  }
  m.outputs.push_back(emit(dir, "sweep.csv", table.str()));
  json verdicts = json::object();
  auto verdict = [](const std::optional<TrendVerdict>& v) { return v ? json(v->describe()) : json(nullptr); };
  verdicts["variance_gap"] = verdict(rep.var_trend);
  verdicts["mean_gap"] = verdict(rep.mean_trend);
  verdicts["ks_distance"] = verdict(rep.ks_trend);
  m.outputs.push_back(emit(dir, "sweep_verdicts.json", verdicts.dump(2) + "\n"));
  std::printf("verdicts: %s\n", verdicts.dump().c_str());
  finish_manifest(m, dir);
  return ok;
}

// ---- report -------------------------------------------------------------------

int cmd_report(const std::string& out_dir) {
  const fs::path dir = out_dir;
  const ManifestCheck mc = verify_manifest(dir);
  const json m = json::parse(read_file(dir / "manifest.json"));
  std::printf("%s run, config %s, code %s\n", m["command"].get<std::string>().c_str(),
              m["config_hash"].get<std::string>().substr(0, 12).c_str(), m["code_version"].get<std::string>().c_str());
  std::printf("started %s, finished %s\n", m["started"].get<std::string>().c_str(),
              m["finished"].get<std::string>().c_str());
  for (const auto& o : m["outputs"]) {
    const std::string name = o["file"].get<std::string>();
    if (!name.starts_with("report_") || !fs::exists(dir / name)) continue;
    const json r = json::parse(read_file(dir / name));
    if (!r.contains("moments")) continue;
    const auto& mo = r["moments"];
    std::printf("  %s: n=%d mean %.6f (+-%.6f) var %.6f (+-%.6f) KS %.4f (1%% %.4f)\n",
                r["statistic"].get<std::string>().c_str(), mo["n"].get<int>(), mo["mean"]["value"].get<double>(),
                mo["mean"]["se"].get<double>(), mo["variance"]["value"].get<double>(),
                mo["variance"]["se"].get<double>(), mo["ks_distance"].get<double>(),
                mo["ks_threshold_1pct"].get<double>());
  }
  std::printf("%zu output files, %zu digest mismatches\n", mc.files, mc.mismatches.size());
  for (const auto& s : mc.mismatches) std::printf("  %s\n", s.c_str());
  return mc.mismatches.empty() ? ok : io;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulation lab for the mollified 2D KPZ equation and its mesoscopic averages"};
  app.require_subcommand(1);

  OracleFlags of;
  auto* oracle = app.add_subcommand("oracle", "closed-form limit-law predictions");
  oracle->add_option("--beta", of.beta, "coupling, below sqrt(2 pi)");
  oracle->add_option("--gamma", of.gamma, "averaging exponent in [0, 1]");
  oracle->add_option("--zeta", of.zetas, "covariance exponents")->delimiter(',');
  oracle->add_option("--eps", of.eps, "also evaluate the second-moment oracle at this eps");
  oracle->add_option("--t", of.t, "time for the second-moment oracle");
  oracle->add_option("--format", of.format)->check(CLI::IsMember({"csv", "json"}));

  RunFlags sim, poly, sweep;
  add_run_flags(app.add_subcommand("simulate", "replica ensemble of local averages (and pairing)"), sim);
  add_run_flags(app.add_subcommand("polymer-check", "lattice vs path-integral cross-check"), poly);
  add_run_flags(app.add_subcommand("sweep", "ensembles over the eps list with trend verdicts"), sweep);
  std::string report_dir;
  auto* report = app.add_subcommand("report", "summarise an output directory and verify its digests");
  report->add_option("--out-dir", report_dir, "directory holding manifest.json")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? ok : config_invalid;
  }

  try {
    if (*oracle) return cmd_oracle(of);
    if (app.got_subcommand("simulate")) return cmd_simulate(sim);
    if (app.got_subcommand("polymer-check")) return cmd_polymer_check(poly);
    if (app.got_subcommand("sweep")) return cmd_sweep(sweep);
    if (*report) return cmd_report(report_dir);
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return exit_code(e.kind());
  } catch (const std::filesystem::filesystem_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return io;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return generic;
  }
  return generic;
}
