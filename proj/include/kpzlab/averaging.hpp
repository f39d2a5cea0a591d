#pragma once

// Replica ensembles of the lattice SHE and the statistics recorded from them.
//
// One replica evolves several fields on the same noise: each field has its own
// initial condition and start step, and all fields active at a step share the
// mollified slab and its exponential factor. Probes then read scalars off the
// final fields. Rows are keyed by replica id, so the result does not depend
// on worker count or execution order.

#include "kpzlab/config.hpp"
#include "kpzlab/deterministic.hpp"
#include "kpzlab/errors.hpp"
#include "kpzlab/fft.hpp"
#include "kpzlab/grid.hpp"
#include "kpzlab/initial_condition.hpp"
#include "kpzlab/io.hpp"
#include "kpzlab/mollifier.hpp"
#include "kpzlab/noise.hpp"
#include "kpzlab/rng.hpp"
#include "kpzlab/she_solver.hpp"
#include "kpzlab/stats.hpp"
#include "kpzlab/theory.hpp"

#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace kpzlab {

// ---------------------------------------------------------------------------
// Disc averages

/// Lattice cells whose centres lie within `radius` (torus metric, <=) of `center`.
inline std::vector<std::size_t> disc_cells(const GridSpec& grid, Point center, double radius) {
  std::vector<std::size_t> cells;
  const long reach = static_cast<long>(std::ceil(radius / grid.dx)) + 1;
  const long ci = std::lround(wrap(center.x, grid.side_len) / grid.dx);
  const long cj = std::lround(wrap(center.y, grid.side_len) / grid.dx);
  const long n = static_cast<long>(grid.n);
  std::vector<bool> seen(grid.cells(), false);
  for (long j = cj - reach; j <= cj + reach; ++j) {
    for (long i = ci - reach; i <= ci + reach; ++i) {
      const auto wi = static_cast<std::size_t>(((i % n) + n) % n);
      const auto wj = static_cast<std::size_t>(((j % n) + n) % n);
      const Point d = min_image(grid.cell_center(wi, wj) - center, grid.side_len);
      const std::size_t k = grid.index(wi, wj);
      if (norm_sq(d) <= radius * radius && !seen[k]) {
        seen[k] = true;
        cells.push_back(k);
      }
    }
  }
  std::sort(cells.begin(), cells.end());
  return cells;
}

/// Arithmetic mean of h over disc_cells(grid, center, radius).
inline double local_average(std::span<const double> h, Point center, double radius, const GridSpec& grid) {
  const auto cells = disc_cells(grid, center, radius);
  if (cells.empty()) fail(ErrorKind::config_invalid, "no cell centre lies within the averaging radius");
  double acc = 0.0;
  for (std::size_t k : cells) acc += h[k];
  return acc / static_cast<double>(cells.size());
}

/// Weights w with sum_y h(y) w(y) = sum_x hbar_r(x) g(x - center) dx^2, where
/// hbar_r is the disc average of h at radius r around cell x.
inline std::vector<double> pairing_weights(const GridSpec& grid, Point center, double radius,
                                           const TestFunction& g) {
  std::vector<double> w(grid.cells(), 0.0);
  const auto offsets = disc_cells(grid, {0.0, 0.0}, radius);
  if (offsets.empty()) fail(ErrorKind::config_invalid, "no cell centre lies within the averaging radius");
  const double inv = 1.0 / static_cast<double>(offsets.size());
  const auto support = disc_cells(grid, center, g.support_radius() + grid.dx);
  const std::size_t n = grid.n;
  for (std::size_t x : support) {
    const std::size_t xi = x % n, xj = x / n;
    const double gx = g(min_image(grid.cell_center(xi, xj) - center, grid.side_len)) * grid.dx * grid.dx;
    if (gx == 0.0) continue;
    for (std::size_t o : offsets) {
      const std::size_t yi = (xi + o % n) % n, yj = (xj + o / n) % n;
      w[grid.index(yi, yj)] += gx * inv;
    }
  }
  return w;
}

// ---------------------------------------------------------------------------
// Ensemble engine

struct FieldSpec {
  std::string name;
  InitialCondition ic;
  std::size_t start_step = 0;  ///< the field is exp(h0) at time start_step * dt
};

struct FinalFields {
  const GridSpec& grid;
  std::vector<std::vector<double>> u;
  std::vector<std::vector<double>> h;
};

struct Probe {
  std::string id;
  std::function<double(const FinalFields&)> eval;
};

struct EnsemblePlan {
  GridSpec grid;
  ScaleSet scale;
  std::shared_ptr<const Mollifier> mollifier;
  std::vector<FieldSpec> fields;
  std::vector<Probe> probes;
  bool zero_noise = false;
};

/// exp(h0) on the lattice for every field of the plan.
inline std::vector<std::vector<double>> initial_fields(const EnsemblePlan& plan) {
  const std::size_t steps = plan.grid.steps_to(plan.grid.horizon);
  std::vector<std::vector<double>> u;
  for (const auto& f : plan.fields) {
    if (f.start_step > steps) fail(ErrorKind::config_invalid, "field '" + f.name + "' starts after the horizon");
    u.push_back(init_field(f.ic, plan.grid, plan.scale).u);
  }
  return u;
}

/// Evolves all fields of `plan` for one replica and evaluates the probes.
inline std::vector<double> run_replica(const EnsemblePlan& plan, std::uint64_t seed, std::uint64_t replica,
                                       const HeatPropagator& heat, SpectralWorkspace& ws,
                                       std::vector<std::vector<double>> u) {
  const GridSpec& g = plan.grid;
  const std::size_t steps = g.steps_to(g.horizon);
  const std::size_t nf = plan.fields.size();
  LatticeNoiseSource source(*plan.mollifier, seed, replica, plan.zero_noise);
  MollifiedSlab slab;
  std::vector<double> factor(g.cells());
  for (std::size_t k = 0; k < steps; ++k) {
    bool any = false;
    for (std::size_t f = 0; f < nf; ++f) {
      if (k < plan.fields[f].start_step) continue;
      heat.apply(u[f], ws);
      any = true;
    }
    if (!any) continue;
    source.fill(k, slab);
    noise_factor(slab, plan.scale.beta_eps, factor);
    for (std::size_t f = 0; f < nf; ++f) {
      if (k < plan.fields[f].start_step) continue;
      if (!apply_factor(u[f], factor)) {
        fail(ErrorKind::numerical, "positivity lost in field '" + plan.fields[f].name + "' at step " +
                                       std::to_string(k));
      }
    }
  }
  FinalFields out{g, std::move(u), {}};
  out.h.resize(nf);
  for (std::size_t f = 0; f < nf; ++f) out.h[f] = hopf_cole(out.u[f]);
  std::vector<double> values;
  values.reserve(plan.probes.size());
  for (const auto& p : plan.probes) values.push_back(p.eval(out));
  return values;
}

struct EnsembleResult {
  std::vector<std::string> ids;
  std::vector<std::uint64_t> replica_ids;
  std::vector<std::uint64_t> seeds;
  std::vector<std::vector<double>> rows;

  std::size_t column_index(const std::string& id) const {
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (ids[i] == id) return i;
    }
    fail(ErrorKind::config_invalid, "no statistic named '" + id + "'");
  }
  std::vector<double> column(const std::string& id) const {
    const std::size_t c = column_index(id);
    std::vector<double> v(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) v[r] = rows[r][c];
    return v;
  }
};

/// Append-only CSV of finished replicas. The first line binds the file to a
/// config hash; a torn final line from an interrupted run is dropped on load.
class Checkpoint {
 public:
  Checkpoint(std::filesystem::path path, std::string config_hash, std::vector<std::string> ids)
      : path_(std::move(path)), hash_(std::move(config_hash)), ids_(std::move(ids)) {}

  const std::filesystem::path& path() const { return path_; }

  std::string header() const {
    std::string h = "replica_id,seed";
    for (const auto& id : ids_) h += "," + id;
    return h;
  }

  /// Completed rows keyed by replica id; empty if the file is absent.
  std::map<std::uint64_t, std::pair<std::uint64_t, std::vector<double>>> load() const {
    std::map<std::uint64_t, std::pair<std::uint64_t, std::vector<double>>> rows;
    if (!std::filesystem::exists(path_)) return rows;
    const std::string text = read_file(path_);
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != "# config_hash=" + hash_) {
      fail(ErrorKind::config_invalid, "checkpoint " + path_.string() + " belongs to a different configuration");
    }
    if (!std::getline(in, line) || line != header()) {
      fail(ErrorKind::config_invalid, "checkpoint " + path_.string() + " has an unexpected header");
    }
    const bool complete_tail = !text.empty() && text.back() == '\n';
    std::vector<std::string> lines;
    while (std::getline(in, line)) lines.push_back(line);
    if (!complete_tail && !lines.empty()) lines.pop_back();
    for (const auto& l : lines) {
      const auto cells = detail::split(l, ',');
      if (cells.size() != ids_.size() + 2) continue;
      const std::uint64_t rid = detail::parse_uint("replica_id", cells[0]);
      const std::uint64_t seed = detail::parse_uint("seed", cells[1]);
      std::vector<double> v;
      for (std::size_t i = 2; i < cells.size(); ++i) v.push_back(detail::parse_double("value", cells[i]));
      rows[rid] = {seed, std::move(v)};
    }
    return rows;
  }

  void open_for_append() {
    const bool fresh = !std::filesystem::exists(path_);
    if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
    if (!fresh) {
      // Drop a torn tail so appended rows start on a fresh line.
      std::string text = read_file(path_);
      if (!text.empty() && text.back() != '\n') {
        text.erase(text.rfind('\n') + 1);
        write_file(path_, text);
      }
    }
    out_.open(path_, std::ios::app);
    if (!out_) fail(ErrorKind::io, "cannot open checkpoint " + path_.string());
    if (fresh) out_ << "# config_hash=" << hash_ << '\n' << header() << '\n' << std::flush;
  }

  void append(std::uint64_t replica, std::uint64_t seed, const std::vector<double>& values) {
    std::ostringstream os;
    os << replica << ',' << seed;
    for (double v : values) os << ',' << format_double(v);
    os << '\n';
    std::lock_guard lock(mutex_);
    out_ << os.str() << std::flush;
  }

 private:
  std::filesystem::path path_;
  std::string hash_;
  std::vector<std::string> ids_;
  std::ofstream out_;
  std::mutex mutex_;
};

struct RunOptions {
  unsigned workers = 1;
  std::optional<std::filesystem::path> checkpoint;
  std::string config_hash;
  std::function<void(std::size_t done, std::size_t total)> progress;
};

/// Runs replicas 0..replicas-1. Replica r uses noise seed
/// replica_seed(master_seed, r); finished replicas found in the checkpoint
/// are reused rather than recomputed.
inline EnsembleResult run_ensemble(const EnsemblePlan& plan, std::size_t replicas, std::uint64_t master_seed,
                                   const RunOptions& opt = {}) {
  EnsembleResult res;
  for (const auto& p : plan.probes) res.ids.push_back(p.id);
  res.replica_ids.resize(replicas);
  res.seeds.resize(replicas);
  res.rows.resize(replicas);
  std::vector<bool> done(replicas, false);

  std::unique_ptr<Checkpoint> ckpt;
  if (opt.checkpoint) {
    ckpt = std::make_unique<Checkpoint>(*opt.checkpoint, opt.config_hash, res.ids);
    for (auto& [rid, row] : ckpt->load()) {
      if (rid >= replicas) continue;
      if (row.first != replica_seed(master_seed, rid)) {
        fail(ErrorKind::config_invalid, "checkpoint seed mismatch for replica " + std::to_string(rid));
      }
      res.seeds[rid] = row.first;
      res.rows[rid] = std::move(row.second);
      done[rid] = true;
    }
    ckpt->open_for_append();
  }

  std::vector<std::size_t> todo;
  for (std::size_t r = 0; r < replicas; ++r) {
    res.replica_ids[r] = r;
    if (!done[r]) todo.push_back(r);
  }
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> finished{replicas - todo.size()};
  std::atomic<bool> abort{false};
  std::mutex err_mutex;
  std::optional<Error> first_error;
  std::uint64_t failed_replica = 0;
  const HeatPropagator heat(plan.grid, plan.grid.dt);
  const auto initial = initial_fields(plan);

  auto worker = [&] {
    SpectralWorkspace ws(plan.grid.n);
    while (!abort) {
      const std::size_t i = next.fetch_add(1);
      if (i >= todo.size()) return;
      const std::size_t r = todo[i];
      const std::uint64_t seed = replica_seed(master_seed, r);
      try {
        auto values = run_replica(plan, seed, r, heat, ws, initial);
        if (ckpt) ckpt->append(r, seed, values);
        res.seeds[r] = seed;
        res.rows[r] = std::move(values);
      } catch (const Error& e) {
        std::lock_guard lock(err_mutex);
        if (!first_error || r < failed_replica) {
          first_error = e;
          failed_replica = r;
        }
        abort = true;
        return;
      }
      const std::size_t f = ++finished;
      if (opt.progress) {
        std::lock_guard lock(err_mutex);
        opt.progress(f, replicas);
      }
    }
  };
  const unsigned workers = std::max(1u, opt.workers);
  if (workers == 1 || todo.size() <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < std::min<std::size_t>(workers, todo.size()); ++w) pool.emplace_back(worker);
  }
  if (first_error) {
    fail(first_error->kind(), "replica " + std::to_string(failed_replica) + " failed: " + first_error->what());
  }
  return res;
}

// ---------------------------------------------------------------------------
// Probes

inline Probe point_u_probe(std::string id, std::size_t field, Point x) {
  return {std::move(id), [field, x](const FinalFields& f) { return bilinear(f.u[field], f.grid, x); }};
}

inline Probe point_h_probe(std::string id, std::size_t field, Point x) {
  return {std::move(id), [field, x](const FinalFields& f) { return bilinear(f.h[field], f.grid, x); }};
}

inline Probe local_average_probe(std::string id, std::size_t field, const GridSpec& grid, Point center,
                                 double radius) {
  auto cells = std::make_shared<const std::vector<std::size_t>>(disc_cells(grid, center, radius));
  if (cells->empty()) fail(ErrorKind::config_invalid, "no cell centre lies within the averaging radius");
  return {std::move(id), [field, cells](const FinalFields& f) {
            double acc = 0.0;
            for (std::size_t k : *cells) acc += f.h[field][k];
            return acc / static_cast<double>(cells->size());
          }};
}

inline Probe weighted_sum_probe(std::string id, std::size_t field, std::vector<double> weights) {
  auto w = std::make_shared<const std::vector<double>>(std::move(weights));
  return {std::move(id), [field, w](const FinalFields& f) {
            double acc = 0.0;
            const auto& h = f.h[field];
            for (std::size_t k = 0; k < h.size(); ++k) {
              if ((*w)[k] != 0.0) acc += (*w)[k] * h[k];
            }
            return acc;
          }};
}

/// Spatial mean of h^power over all cells.
inline Probe spatial_moment_probe(std::string id, std::size_t field, int power) {
  return {std::move(id), [field, power](const FinalFields& f) {
            double acc = 0.0;
            for (double v : f.h[field]) acc += power == 1 ? v : v * v;
            return acc / static_cast<double>(f.h[field].size());
          }};
}

/// Spatial mean of h(x) (h(x + d e1) + h(x + d e2)) / 2 with off-lattice
/// values linearly interpolated along the axis; by lattice symmetry this
/// equals the average over all four axis directions.
inline Probe spatial_cross_probe(std::string id, std::size_t field, double distance) {
  return {std::move(id), [field, distance](const FinalFields& f) {
            const GridSpec& g = f.grid;
            const auto& h = f.h[field];
            const double s = distance / g.dx;
            const auto q = static_cast<std::size_t>(std::floor(s));
            const double fr = s - std::floor(s);
            const std::size_t n = g.n;
            double acc = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
              const std::size_t j0 = (j + q) % n, j1 = (j + q + 1) % n;
              for (std::size_t i = 0; i < n; ++i) {
                const std::size_t i0 = (i + q) % n, i1 = (i + q + 1) % n;
                const double hx = (1.0 - fr) * h[g.index(i0, j)] + fr * h[g.index(i1, j)];
                const double hy = (1.0 - fr) * h[g.index(i, j0)] + fr * h[g.index(i, j1)];
                acc += h[g.index(i, j)] * 0.5 * (hx + hy);
              }
            }
            return acc / static_cast<double>(g.cells());
          }};
}

/// Cov[h(x), h(x + d)] over replicas from per-replica spatial means:
/// mean(cross) - mean(first)^2, with a jackknife error over replicas.
inline Jackknifed stationary_moment(std::span<const double> second, std::span<const double> first) {
  const std::size_t n = second.size();
  if (n < 3 || first.size() != n) fail(ErrorKind::domain, "stationary_moment needs >= 3 paired replicas");
  double s2 = 0.0, s1 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    s2 += second[i];
    s1 += first[i];
  }
  const double dn = static_cast<double>(n);
  const double full = s2 / dn - (s1 / dn) * (s1 / dn);
  std::vector<double> loo(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double a = (s1 - first[i]) / (dn - 1.0);
    loo[i] = (s2 - second[i]) / (dn - 1.0) - a * a;
  }
  // The plug-in estimate is biased by Var(mean first); the jackknife removes it.
  double mean_loo = 0.0;
  for (double v : loo) mean_loo += v;
  mean_loo /= dn;
  Jackknifed j = detail::jackknife(full, loo);
  j.value = dn * full - (dn - 1.0) * mean_loo;
  return j;
}

// ---------------------------------------------------------------------------
// Experiment-level operations

struct SampleSet {
  std::string statistic_id;
  std::vector<double> values;
  std::vector<std::uint64_t> seeds;
  std::vector<std::uint64_t> replica_ids;
  std::string config_hash;
  LimitPrediction prediction;
  double eps = 0.0;
};

/// Deterministic part of the prediction: hbar(t, center) for gamma < 1 and
/// its unit-disc average for gamma = 1, on the solver torus.
inline double deterministic_part(const ExperimentConfig& c) {
  if (c.gamma >= 1.0) return ball_average_hbar(c.h0, c.t, c.center_point(), 1.0, c.side_len);
  return solve_hbar(c.h0, c.t, c.center_point(), c.side_len);
}

inline EnsemblePlan make_plan(const ExperimentConfig& c, double eps, std::shared_ptr<const MollifierProfile> profile) {
  EnsemblePlan plan;
  plan.grid = c.grid_for(eps);
  plan.scale = make_scale_set(c.beta, c.gamma, eps, profile->l2_norm_sq, c.t);
  plan.mollifier = std::make_shared<const Mollifier>(*profile, eps, plan.grid);
  plan.fields.push_back({"h0", c.h0, 0});
  plan.zero_noise = !c.noise;
  return plan;
}

inline SampleSet to_sample_set(const EnsembleResult& r, const std::string& id, const ExperimentConfig& c,
                               double eps, const LimitPrediction& pred) {
  SampleSet s;
  s.statistic_id = id;
  s.values = r.column(id);
  s.seeds = r.seeds;
  s.replica_ids = r.replica_ids;
  s.config_hash = c.hash();
  s.prediction = pred;
  s.eps = eps;
  return s;
}

inline std::filesystem::path checkpoint_path(const ExperimentConfig& c, const std::string& what, double eps) {
  return std::filesystem::path(c.out_dir) / ("checkpoint_" + what + "_eps" + format_double(eps) + ".csv");
}

/// Local averages of h over B(center, r_eps), one per replica, at eps[0].
inline SampleSet run_replicas(const ExperimentConfig& c, RunOptions opt = {}) {
  validate_config(c);
  const double eps = c.eps.front();
  auto profile = std::make_shared<const MollifierProfile>(build_profile(c.profile));
  EnsemblePlan plan = make_plan(c, eps, profile);
  plan.probes.push_back(local_average_probe("local_average", 0, plan.grid, c.center_point(), plan.scale.r_eps));
  if (opt.config_hash.empty()) opt.config_hash = c.hash();
  const auto res = run_ensemble(plan, c.replicas, c.master_seed, opt);
  return to_sample_set(res, "local_average", c, eps, predicted_limit_law(plan.scale, deterministic_part(c)));
}

struct PairingPrediction {
  double deterministic = 0.0;  ///< sum_x hbar(t, x) g(x) dx^2
  double mass = 0.0;           ///< sum_x g(x) dx^2
};

inline PairingPrediction pairing_prediction(const ExperimentConfig& c, const GridSpec& grid) {
  const Point center = c.center_point();
  PairingPrediction p;
  for (std::size_t k : disc_cells(grid, center, c.test_function.support_radius() + grid.dx)) {
    const Point x = grid.cell_center(k % grid.n, k / grid.n);
    const double gx = c.test_function(min_image(x - center, grid.side_len)) * grid.dx * grid.dx;
    if (gx == 0.0) continue;
    p.deterministic += solve_hbar(c.h0, c.t, x, grid.side_len) * gx;
    p.mass += gx;
  }
  return p;
}

/// Riemann sums of the disc-averaged h field against g, one per replica. The
/// prediction is sum_x (hbar(t, x) + height_shift) g(x) dx^2 with zero variance.
inline SampleSet field_pairing(const ExperimentConfig& c, RunOptions opt = {}) {
  validate_config(c);
  if (c.test_function.kind == TestFunction::Kind::none) {
    fail(ErrorKind::config_invalid, "field_pairing needs a test_function");
  }
  const double eps = c.eps.front();
  auto profile = std::make_shared<const MollifierProfile>(build_profile(c.profile));
  EnsemblePlan plan = make_plan(c, eps, profile);
  plan.probes.push_back(weighted_sum_probe(
      "pairing", 0, pairing_weights(plan.grid, c.center_point(), plan.scale.r_eps, c.test_function)));
  if (opt.config_hash.empty()) opt.config_hash = c.hash();
  const auto res = run_ensemble(plan, c.replicas, c.master_seed, opt);
  const PairingPrediction pp = pairing_prediction(c, plan.grid);
  LimitPrediction pred;
  pred.height_shift = height_shift(c.beta);
  pred.deterministic_part = pp.deterministic;
  pred.predicted_mean = pp.deterministic + pred.height_shift * pp.mass;
  return to_sample_set(res, "pairing", c, eps, pred);
}

/// run_replicas and, when a test function is configured, field_pairing from a
/// single ensemble; each statistic matches its standalone counterpart.
inline std::vector<SampleSet> simulate_statistics(const ExperimentConfig& c, RunOptions opt = {}) {
  validate_config(c);
  const double eps = c.eps.front();
  auto profile = std::make_shared<const MollifierProfile>(build_profile(c.profile));
  EnsemblePlan plan = make_plan(c, eps, profile);
  const Point center = c.center_point();
  plan.probes.push_back(local_average_probe("local_average", 0, plan.grid, center, plan.scale.r_eps));
  const bool pairing = c.test_function.kind != TestFunction::Kind::none;
  if (pairing) {
    plan.probes.push_back(
        weighted_sum_probe("pairing", 0, pairing_weights(plan.grid, center, plan.scale.r_eps, c.test_function)));
  }
  if (opt.config_hash.empty()) opt.config_hash = c.hash();
  const auto res = run_ensemble(plan, c.replicas, c.master_seed, opt);
  std::vector<SampleSet> out;
  out.push_back(to_sample_set(res, "local_average", c, eps, predicted_limit_law(plan.scale, deterministic_part(c))));
  if (pairing) {
    const PairingPrediction pp = pairing_prediction(c, plan.grid);
    LimitPrediction pred;
    pred.height_shift = height_shift(c.beta);
    pred.deterministic_part = pp.deterministic;
    pred.predicted_mean = pp.deterministic + pred.height_shift * pp.mass;
    out.push_back(to_sample_set(res, "pairing", c, eps, pred));
  }
  return out;
}

struct SweepRow {
  double eps = 0.0;
  MomentReport moments;
  LimitPrediction prediction;
  double var_gap = 0.0;   ///< |variance - sigma_gamma^2|
  double mean_gap = 0.0;  ///< |mean - predicted mean|
  double ks = 0.0;
  SampleSet samples;
};

struct TrendReport {
  std::vector<SweepRow> rows;
  /// Only present with two or more eps values.
  std::optional<TrendVerdict> var_trend, mean_trend, ks_trend;
};

/// run_replicas at every eps of the list, plus monotone-trend verdicts on the
/// discrepancies from the prediction.
inline TrendReport epsilon_sweep(const ExperimentConfig& c, const RunOptions& opt = {}) {
  validate_config(c);
  TrendReport rep;
  for (double e : c.eps) {
    ExperimentConfig ce = c;
    ce.eps = {e};
    RunOptions o = opt;
    if (opt.checkpoint) o.checkpoint = checkpoint_path(c, "sweep", e);
    o.config_hash = ce.hash();
    SweepRow row;
    row.eps = e;
    row.samples = run_replicas(ce, o);
    row.prediction = row.samples.prediction;
    const auto& p = row.prediction;
    if (row.samples.values.size() >= 8) {
      row.moments = moment_report(row.samples.values, p.predicted_mean, p.sigma_gamma_sq);
      row.var_gap = std::abs(row.moments.variance.value - p.sigma_gamma_sq);
      row.mean_gap = std::abs(row.moments.mean.value - p.predicted_mean);
      row.ks = row.moments.ks_distance;
    }
    rep.rows.push_back(std::move(row));
  }
  if (rep.rows.size() >= 2) {
    std::vector<double> v, m, k;
    for (const auto& r : rep.rows) {
      v.push_back(r.var_gap);
      m.push_back(r.mean_gap);
      k.push_back(r.ks);
    }
    rep.var_trend = trend_test(v);
    rep.mean_trend = trend_test(m);
    rep.ks_trend = trend_test(k);
  }
  return rep;
}

}  // namespace kpzlab
