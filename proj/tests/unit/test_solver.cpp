#include "kpzlab/deterministic.hpp"
#include "kpzlab/she_solver.hpp"
#include "kpzlab/stats.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <complex>

using namespace kpzlab;

namespace {

const MollifierProfile& profile() {
  static const MollifierProfile p = build_profile();
  return p;
}

ScaleSet scales(double beta, double eps) { return make_scale_set(beta, 0.5, eps, profile().l2_norm_sq, 0.5); }

std::vector<double> mean_one_samples(double eps, double side, std::size_t replicas, double dt_factor,
                                     bool log_field) {
  const double dt = default_time_step(eps, 0.5) * dt_factor;
  const GridSpec g = make_grid(side, default_points_per_side(side, eps), dt, 0.5);
  const ScaleSet s = scales(1.0, eps);
  const Mollifier mol(profile(), eps, g);
  std::vector<double> out;
  for (std::size_t r = 0; r < replicas; ++r) {
    LatticeNoiseSource src(mol, 2024, r);
    const FieldState f = evolve(init_field(InitialCondition::zero(), g, s), 0.5, [&](std::uint64_t k) {
      return src(k);
    });
    const double u = f.u[g.index(g.n / 2, g.n / 2)];
    out.push_back(log_field ? std::log(u) : u);
  }
  return out;
}

}  // namespace

TEST(InitField, Conditions) {
  const GridSpec g = make_grid(16.0, 64, 0.01, 1.0);
  const ScaleSet s = scales(1.0, 0.5);
  for (double v : init_field(InitialCondition::zero(), g, s).u) EXPECT_EQ(v, 1.0);
  for (double v : init_field(InitialCondition::constant(0.3), g, s).u) EXPECT_DOUBLE_EQ(v, std::exp(0.3));
  // Centred at the origin; periodic images at distance 16 are below roundoff.
  const FieldState b = init_field(InitialCondition::gaussian_bump(1.0, 1.0), g, s);
  for (std::size_t j : {0u, 1u, 3u}) {
    for (std::size_t i : {0u, 2u}) {
      const Point x = g.cell_center(i, j);
      EXPECT_NEAR(b.u[g.index(i, j)], 1.0 + std::exp(-norm_sq(x) / 2.0), 1e-14);
    }
  }
}

TEST(HeatStep, ConstantUnchanged) {
  const GridSpec g = make_grid(2.0, 32, 0.01, 1.0);
  FieldState s = init_field(InitialCondition::constant(0.7), g, scales(1.0, 0.25));
  s = heat_step(s, 0.05);
  for (double v : s.u) EXPECT_NEAR(v, std::exp(0.7), 1e-14);
  EXPECT_DOUBLE_EQ(s.time, 0.05);
}

TEST(HeatStep, DeltaMatchesDirectFourierSum) {
  const GridSpec g = make_grid(1.0, 16, 0.002, 1.0);
  FieldState s = init_field(InitialCondition::zero(), g, scales(1.0, 0.25));
  std::fill(s.u.begin(), s.u.end(), 0.0);
  s.u[g.index(3, 5)] = 1.0 / (g.dx * g.dx);
  const double dt = 0.002;
  s = heat_step(s, dt);

  const long n = static_cast<long>(g.n);
  const double k0 = kTwoPi / g.side_len;
  double peak = 0.0;
  for (double v : s.u) peak = std::max(peak, std::abs(v));
  for (std::size_t j = 0; j < g.n; ++j) {
    for (std::size_t i = 0; i < g.n; ++i) {
      std::complex<double> acc = 0.0;
      for (long b = -n / 2; b < n / 2; ++b) {
        for (long a = -n / 2; a < n / 2; ++a) {
          // Nyquist modes carry the same signed index as in the solver.
          const double kx = k0 * static_cast<double>(a), ky = k0 * static_cast<double>(b);
          const double phase = kx * (static_cast<double>(i) - 3.0) * g.dx + ky * (static_cast<double>(j) - 5.0) * g.dx;
          acc += std::exp(-0.5 * (kx * kx + ky * ky) * dt) * std::polar(1.0, phase);
        }
      }
      const double direct = acc.real() / (g.side_len * g.side_len);
      ASSERT_NEAR(s.u[g.index(i, j)], direct, 1e-12 * peak) << i << "," << j;
    }
  }
}

TEST(HeatStep, Semigroup) {
  const GridSpec g = make_grid(2.0, 32, 0.01, 1.0);
  const FieldState s0 = init_field(InitialCondition::gaussian_bump(1.0, 0.1, {1.0, 1.0}), g, scales(1.0, 0.25));
  const FieldState one = heat_step(s0, 0.02);
  const FieldState two = heat_step(heat_step(s0, 0.01), 0.01);
  for (std::size_t k = 0; k < one.u.size(); ++k) EXPECT_NEAR(one.u[k], two.u[k], 1e-14);
}

TEST(NoiseStep, ZeroBetaIsIdentity) {
  const GridSpec g = make_grid(2.0, 32, 0.01, 1.0);
  const Mollifier mol(profile(), 0.25, g);
  FieldState s = init_field(InitialCondition::gaussian_bump(1.0, 0.1, {1.0, 1.0}), g, scales(0.0, 0.25));
  const auto before = s.u;
  LatticeNoiseSource src(mol, 1, 0);
  s = noise_step(s, src(0));
  EXPECT_EQ(s.u, before);
}

TEST(NoiseStep, ZeroSlabAppliesCompensator) {
  const GridSpec g = make_grid(2.0, 32, 0.01, 1.0);
  const Mollifier mol(profile(), 0.25, g);
  const ScaleSet sc = scales(1.0, 0.25);
  LatticeNoiseSource quiet(mol, 1, 0, true);
  const MollifiedSlab slab = quiet(0);
  const FieldState s = noise_step(init_field(InitialCondition::zero(), g, sc), slab);
  const double expected = std::exp(-0.5 * sc.beta_eps * sc.beta_eps * mol.discrete_norm_sq() * g.dt);
  EXPECT_LT(expected, 1.0);
  for (double v : s.u) EXPECT_DOUBLE_EQ(v, expected);
}

TEST(NoiseStep, SubstepMeanOne) {
  const GridSpec g = make_grid(2.0, 32, 0.01, 1.0);
  const Mollifier mol(profile(), 0.25, g);
  const ScaleSet sc = scales(1.0, 0.25);
  std::vector<double> u;
  for (std::uint64_t r = 0; r < 200; ++r) {
    LatticeNoiseSource src(mol, 77, r);
    u.push_back(noise_step(init_field(InitialCondition::zero(), g, sc), src(0)).u[g.index(4, 9)]);
  }
  const auto m = moment_report(u);
  EXPECT_LE(std::abs(m.mean.value - 1.0), 4.0 * m.mean.se);
}

TEST(NoiseStep, PositivityLossIsReported) {
  const GridSpec g = make_grid(2.0, 32, 0.01, 1.0);
  FieldState s = init_field(InitialCondition::zero(), g, scales(1.0, 0.25));
  MollifiedSlab slab;
  slab.n = g.n;
  slab.step_index = 12;
  slab.values.assign(g.cells(), 0.0);
  slab.values[5] = -1e6;
  try {
    noise_step(s, slab);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::numerical);
    EXPECT_NE(std::string(e.what()).find("12"), std::string::npos);
  }
}

TEST(Evolve, NoNoiseMatchesClosedForm) {
  const GridSpec g = make_grid(8.0, 128, 1.0 / 64.0, 0.5);
  const ScaleSet sc = scales(0.0, 0.1);
  const InitialCondition ic = InitialCondition::gaussian_bump(1.0, 1.0, g.midpoint());
  const Mollifier mol(profile(), 0.25, g);
  LatticeNoiseSource src(mol, 1, 0);
  const FieldState f = evolve(init_field(ic, g, sc), 0.5, [&](std::uint64_t k) { return src(k); });
  for (std::size_t j = 0; j < g.n; j += 7) {
    for (std::size_t i = 0; i < g.n; i += 5) {
      EXPECT_NEAR(f.u[g.index(i, j)], std::exp(solve_hbar(ic, 0.5, g.cell_center(i, j), g.side_len)), 1e-6);
    }
  }
}

TEST(Evolve, ObserversAndResume) {
  const GridSpec g = make_grid(2.0, 32, 0.01, 0.2);
  const Mollifier mol(profile(), 0.25, g);
  const ScaleSet sc = scales(1.0, 0.25);
  LatticeNoiseSource src(mol, 9, 0);
  auto source = [&](std::uint64_t k) { return src(k); };
  std::vector<double> seen;
  const FieldState whole = evolve(init_field(InitialCondition::zero(), g, sc), 0.2, source,
                                  {{0.1, [&](const FieldState& s) { seen.push_back(s.time); }}});
  ASSERT_EQ(seen.size(), 1u);
  EXPECT_NEAR(seen[0], 0.1, 1e-12);
  // Stopping at 0.1 and continuing gives the same field bit for bit.
  const FieldState half = evolve(init_field(InitialCondition::zero(), g, sc), 0.1, source);
  const FieldState rest = evolve(half, 0.2, source);
  EXPECT_EQ(rest.u, whole.u);
}

TEST(Evolve, MartingaleMeanOne) {
  // Smaller torus and coarser eps than the default so the test stays fast.
  const auto u = mean_one_samples(0.15, 2.0, 400, 1.0, false);
  const auto m = moment_report(u);
  EXPECT_LE(std::abs(m.mean.value - 1.0), 4.0 * m.mean.se) << m.mean.value << " +- " << m.mean.se;
}

TEST(Evolve, TimeStepRobustness) {
  const auto coarse = moment_report(mean_one_samples(0.15, 2.0, 200, 1.0, true));
  const auto fine = moment_report(mean_one_samples(0.15, 2.0, 200, 0.5, true));
  const double se = std::hypot(coarse.mean.se, fine.mean.se);
  EXPECT_LE(std::abs(coarse.mean.value - fine.mean.value), 3.0 * se);
  EXPECT_LE(std::abs(coarse.variance.value - fine.variance.value),
            3.0 * std::hypot(coarse.variance.se, fine.variance.se));
}

TEST(HopfCole, RoundTrip) {
  const GridSpec g = make_grid(2.0, 16, 0.01, 1.0);
  const ScaleSet sc = scales(1.0, 0.25);
  for (double v : hopf_cole(init_field(InitialCondition::zero(), g, sc))) EXPECT_EQ(v, 0.0);
  for (double v : hopf_cole(init_field(InitialCondition::constant(-1.25), g, sc))) EXPECT_DOUBLE_EQ(v, -1.25);
  const FieldState b = init_field(InitialCondition::gaussian_bump(2.0, 0.2, {1.0, 1.0}), g, sc);
  const auto h = hopf_cole(b);
  for (std::size_t k = 0; k < h.size(); ++k) EXPECT_NEAR(std::exp(h[k]), b.u[k], 1e-15 * b.u[k]);
  std::vector<double> bad{1.0, 0.0};
  EXPECT_THROW(hopf_cole(std::span<const double>(bad)), Error);
}
