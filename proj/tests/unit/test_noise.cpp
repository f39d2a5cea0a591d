#include "kpzlab/noise.hpp"
#include "kpzlab/quadrature.hpp"
#include "kpzlab/stats.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace kpzlab;

namespace {

const MollifierProfile& profile() {
  static const MollifierProfile p = build_profile();
  return p;
}

// Lattice sum of f(x)^power h^2 over [-1, 1]^2 with spacing h; spectrally
// accurate for the bump, which is smooth and vanishes with all derivatives.
double lattice_integral(int per_unit, int power) {
  const double h = 1.0 / per_unit;
  const double c = standard_bump_normalization();
  double acc = 0.0;
  for (int j = -per_unit; j <= per_unit; ++j) {
    for (int i = -per_unit; i <= per_unit; ++i) {
      const double r2 = (i * h) * (i * h) + (j * h) * (j * h);
      if (r2 >= 1.0) continue;
      acc += std::pow(c * std::exp(-1.0 / (1.0 - r2)), power);
    }
  }
  return acc * h * h;
}

}  // namespace

TEST(Philox, KnownAnswers) {
  // Random123 known-answer vectors for philox4x32-10.
  EXPECT_EQ(philox4x32_10({0, 0, 0, 0}, {0, 0}), (Counter4{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8}));
  EXPECT_EQ(philox4x32_10({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}),
            (Counter4{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd}));
  EXPECT_EQ(philox4x32_10({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}),
            (Counter4{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1}));
}

TEST(NormalStream, QuantileAndMoments) {
  EXPECT_NEAR(normal_quantile(0.5), 0.0, 1e-15);
  EXPECT_NEAR(normal_quantile(0.975), 1.959963984540054, 1e-14);
  EXPECT_NEAR(normal_quantile(1e-10), -6.361340902404056, 1e-12);
  EXPECT_NEAR(normal_quantile(0.3), -normal_quantile(0.7), 1e-15);

  std::vector<double> v(40000);
  NormalStream(99, StreamTag::test, 0, 0).fill(v, 1.0);
  const auto m = moment_report(v, 0.0, 1.0);
  EXPECT_LE(std::abs(m.mean.value) / m.mean.se, 4.0);
  EXPECT_LE(std::abs(m.variance.value - 1.0) / m.variance.se, 4.0);
  EXPECT_LE(std::abs(m.skewness.value) / m.skewness.se, 4.0);
  EXPECT_LE(std::abs(m.excess_kurtosis.value) / m.excess_kurtosis.se, 4.0);
  EXPECT_LT(m.ks_distance, m.ks_threshold_at_1pct);
}

TEST(NormalStream, ElementsIndependentOfLength) {
  std::vector<double> a(11), b(16);
  NormalStream s(5, StreamTag::test, 3, 4);
  s.fill(a, 2.0);
  s.fill(b, 2.0);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i], b[i]);
}

TEST(Profile, NormalisationAndSymmetry) {
  const auto& p = profile();
  const std::size_t side = p.samples_per_side();
  const double h = p.sample_spacing();
  double total = 0.0;
  for (double v : p.samples) {
    EXPECT_GE(v, 0.0);
    total += v;
  }
  EXPECT_NEAR(total * h * h, 1.0, 1e-8);
  for (std::size_t j = 0; j < side; ++j) {
    for (std::size_t i = 0; i < side; ++i) {
      ASSERT_EQ(p.samples[j * side + i], p.samples[(side - 1 - j) * side + (side - 1 - i)]);
    }
  }
  EXPECT_EQ(p.phi({1.0, 0.0}), 0.0);
  EXPECT_EQ(p.phi({0.6, 0.9}), 0.0);
}

TEST(Profile, FrozenConstants) {
  // Two lattice resolutions of the test-side integrals agree to 1e-10, so
  // the lattice values serve as the reference.
  const double a = lattice_integral(200, 2), b = lattice_integral(400, 2);
  ASSERT_NEAR(a, b, 1e-10 * b);
  EXPECT_NEAR(profile().l2_norm_sq, b, 1e-9);
  EXPECT_NEAR(profile().l2_norm_sq, 0.541815444823105, 1e-12);
  EXPECT_NEAR(profile().normalization, 2.14356577579224, 1e-12);
  EXPECT_NEAR(lattice_integral(400, 1), 1.0, 1e-10);
}

TEST(Profile, UnknownKind) {
  try {
    build_profile("gaussian");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::config_invalid);
  }
}

TEST(VKernel, OriginSupportAndMass) {
  const auto& p = profile();
  EXPECT_NEAR(v_kernel(p, 0.0), p.l2_norm_sq, 1e-9);
  EXPECT_EQ(v_kernel(p, 2.5), 0.0);
  EXPECT_EQ(v_kernel(p, 2.0), 0.0);
  const GaussRule rule = gauss_legendre(200, 0.0, 2.0);
  double mass = 0.0;
  for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
    mass += rule.weights[k] * kTwoPi * rule.nodes[k] * v_kernel(p, rule.nodes[k]);
  }
  EXPECT_NEAR(mass, 1.0, 1e-6);
  // Decreasing in r.
  for (double r = 0.0; r < 1.9; r += 0.1) EXPECT_GE(v_kernel(p, r), v_kernel(p, r + 0.1));
}

TEST(NoiseSlab, Deterministic) {
  const GridSpec g = make_grid(1.0, 32, 1e-3, 1.0);
  const NoiseSlab a = sample_noise_slab(7, 2, 9, g);
  const NoiseSlab b = sample_noise_slab(7, 2, 9, g);
  EXPECT_EQ(a.values, b.values);
  EXPECT_NE(a.values, sample_noise_slab(7, 3, 9, g).values);
  EXPECT_NE(a.values, sample_noise_slab(7, 2, 10, g).values);
  EXPECT_NE(a.values, sample_noise_slab(8, 2, 9, g).values);
}

TEST(NoiseSlab, CellMoments) {
  const GridSpec g = make_grid(8.0, 512, 1e-3, 1.0);
  const NoiseSlab s = sample_noise_slab(1, 0, 0, g);
  const double target = g.dt * g.dx * g.dx;
  const double n = static_cast<double>(s.values.size());
  double mean = 0.0;
  for (double v : s.values) mean += v;
  mean /= n;
  double var = 0.0;
  for (double v : s.values) var += (v - mean) * (v - mean);
  var /= n - 1.0;
  EXPECT_LE(std::abs(mean), 5.0 * std::sqrt(target / n));
  EXPECT_LE(std::abs(var - target), 5.0 * target * std::sqrt(2.0 / (n - 1.0)));
}

class Mollify : public ::testing::Test {
 protected:
  static constexpr double kEps = 0.125;
  GridSpec g = make_grid(1.0, 32, 1e-3, 1.0);  // dx = eps / 4
};

TEST_F(Mollify, UnitMassPreserved) {
  NoiseSlab ones;
  ones.n = g.n;
  ones.values.assign(g.cells(), g.dx * g.dx);
  const MollifiedSlab m = mollify_slab(ones, profile(), kEps, g);
  for (double v : m.values) ASSERT_NEAR(v, 1.0, 1e-12);
}

TEST_F(Mollify, MatchesDirectConvolution) {
  const NoiseSlab s = sample_noise_slab(3, 0, 0, g);
  const MollifiedSlab m = mollify_slab(s, profile(), kEps, g);
  const long n = static_cast<long>(g.n);
  // The lattice kernel is phi^eps rescaled to unit lattice mass.
  double mass = 0.0;
  for (long b = 0; b < n; ++b) {
    for (long a = 0; a < n; ++a) mass += profile().phi_eps(min_image(g.cell_center(a, b), g.side_len), kEps);
  }
  mass *= g.dx * g.dx;
  EXPECT_NEAR(mass, 1.0, 5e-3);
  for (long j : {0L, 5L, 31L}) {
    for (long i : {0L, 17L}) {
      double direct = 0.0;
      for (long b = 0; b < n; ++b) {
        for (long a = 0; a < n; ++a) {
          const Point d = min_image(g.cell_center(i, j) - g.cell_center(a, b), g.side_len);
          direct += profile().phi_eps(d, kEps) * s.values[g.index(a, b)];
        }
      }
      EXPECT_NEAR(m.values[g.index(i, j)], direct / mass, 1e-12);
    }
  }
}

TEST_F(Mollify, ResolutionGuard) {
  const GridSpec coarse = make_grid(1.0, 16, 1e-3, 1.0);
  try {
    mollify_slab(sample_noise_slab(1, 0, 0, coarse), profile(), kEps, coarse);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::config_invalid);
  }
}

TEST_F(Mollify, CovarianceMatchesContinuum) {
  const Mollifier mol(profile(), kEps, g);
  const double e2 = kEps * kEps;
  // Discrete lag sums against eps^-2 V(h / eps) at lags 0, eps/2, eps; the
  // lattice has only four cells per eps, hence the 1% of V(0) tolerance.
  const double tol = 1e-2 * profile().l2_norm_sq / e2;
  EXPECT_NEAR(mol.discrete_norm_sq(), profile().l2_norm_sq / e2, tol);
  for (long lag : {0L, 2L, 4L}) {
    const double cont = v_kernel(profile(), lag * g.dx / kEps) / e2;
    EXPECT_NEAR(mol.covariance(lag, 0), cont, tol) << lag;
    EXPECT_DOUBLE_EQ(mol.covariance(lag, 0), mol.covariance(0, lag));
  }
}

TEST_F(Mollify, EmpiricalCovariance) {
  const Mollifier mol(profile(), kEps, g);
  SpectralWorkspace ws(g.n);
  constexpr int kSlabs = 2000;
  std::vector<double> x0(kSlabs), x2(kSlabs), x4(kSlabs);
  double site_variance = 0.0;
  for (int k = 0; k < kSlabs; ++k) {
    const MollifiedSlab m = mol.apply(sample_noise_slab(11, 0, k, g), ws);
    x0[k] = m.values[g.index(3, 7)];
    x2[k] = m.values[g.index(5, 7)];
    x4[k] = m.values[g.index(7, 7)];
    site_variance = m.site_variance;
  }
  const double scale = g.dt / (kEps * kEps);
  EXPECT_NEAR(site_variance, g.dt * mol.discrete_norm_sq(), 1e-18);
  const std::pair<std::vector<double>*, double> cases[] = {
      {&x0, 0.0}, {&x2, 0.5}, {&x4, 1.0}};
  for (const auto& [x, lag] : cases) {
    const Jackknifed c = covariance(x0, *x);
    const double target = scale * v_kernel(profile(), lag);
    EXPECT_LE(std::abs(c.value - target), 4.0 * c.se) << "lag " << lag << ": " << c.value << " vs " << target;
  }
}
