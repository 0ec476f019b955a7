#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include <gtest/gtest.h>

#include "smx/noise_field.hpp"

using namespace smx;

namespace {

constexpr double kPi = std::numbers::pi;

// direct summation, written out independently of the library
double trace_by_hand(int M, int L) {
  double s = 0.0;
  for (int m = M; m >= 1; --m)
    for (int l = L; l >= 1; --l) s += 1.0 / (double(m) * m * m + double(l) * l * l);
  return s;
}

double e_by_hand(int m, int l, double x, double y) {
  return 2.0 * std::sqrt(3.0) * std::sin(1.5 * m * kPi * x) * std::sin(2.0 * l * kPi * y);
}

}  // namespace

TEST(Philox, KnownAnswerVectors) {
  using C = Philox4x32::Counter;
  EXPECT_EQ(Philox4x32::generate({0, 0, 0, 0}, {0, 0}),
            (C{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8}));
  EXPECT_EQ(Philox4x32::generate({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff},
                                 {0xffffffff, 0xffffffff}),
            (C{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd}));
  EXPECT_EQ(Philox4x32::generate({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344},
                                 {0xa4093822, 0x299f31d0}),
            (C{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1}));
}

TEST(Uniform, StrictlyInsideUnitInterval) {
  EXPECT_GT(uniform_open01(0, 0), 0.0);
  EXPECT_LT(uniform_open01(0xffffffff, 0xffffffff), 1.0);
  EXPECT_NEAR(uniform_open01(0x80000000, 0), 0.5, 1e-15);
  EXPECT_GT(inverse_normal_cdf(uniform_open01(0xffffffff, 0xffffffff)), 8.0);
  EXPECT_LT(inverse_normal_cdf(uniform_open01(0, 0)), -8.0);
}

TEST(InverseNormal, KnownQuantiles) {
  EXPECT_NEAR(inverse_normal_cdf(0.5), 0.0, 1e-15);
  EXPECT_NEAR(inverse_normal_cdf(0.975), 1.959963984540054, 1e-12);
  EXPECT_NEAR(inverse_normal_cdf(0.025), -1.959963984540054, 1e-12);
  EXPECT_NEAR(inverse_normal_cdf(1e-10), -6.361340902404056, 1e-9);
}

TEST(SpectralBasis, EigenvaluesPositiveAndDecreasing) {
  const SpectralBasis b;
  EXPECT_DOUBLE_EQ(b.eta(1, 1), 0.5);
  for (int m = 1; m < 50; ++m)
    for (int l = 1; l < 50; ++l) {
      EXPECT_GT(b.eta(m, l), 0.0);
      EXPECT_LT(b.eta(m + 1, l), b.eta(m, l));
      EXPECT_LT(b.eta(m, l + 1), b.eta(m, l));
    }
  EXPECT_THROW(b.eta(0, 1), std::out_of_range);
  EXPECT_THROW(b.eta(51, 1), std::out_of_range);
}

TEST(Eigenfunction, PointValues) {
  const SpectralBasis b;
  EXPECT_NEAR(eigenfunction(b, 1, 1, 0.0, 0.3), 0.0, 1e-15);
  EXPECT_NEAR(eigenfunction(b, 1, 1, 1.0 / 3.0, 0.25), 2.0 * std::sqrt(3.0), 1e-14);
  for (double x : {0.1, 0.37, 0.5})
    for (double y : {0.05, 0.31}) EXPECT_NEAR(eigenfunction(b, 3, 7, x, y), e_by_hand(3, 7, x, y), 1e-13);
  EXPECT_THROW(eigenfunction(b, 51, 1, 0.1, 0.1), std::out_of_range);
}

TEST(Eigenfunction, VanishesOnBoundary) {
  const SpectralBasis b;
  for (int m : {1, 2, 17, 50})
    for (int l : {1, 9, 50})
      for (double s : {0.0, 0.2, 0.41}) {
        EXPECT_NEAR(eigenfunction(b, m, l, 0.0, s), 0.0, 1e-12);
        EXPECT_NEAR(eigenfunction(b, m, l, b.lx, s), 0.0, 1e-12);
        EXPECT_NEAR(eigenfunction(b, m, l, s, 0.0), 0.0, 1e-12);
        EXPECT_NEAR(eigenfunction(b, m, l, s, b.ly), 0.0, 1e-12);
      }
}

TEST(Eigenfunction, TimeOnlyHasNoSpatialModes) {
  const SpectralBasis b = SpectralBasis::make(2.0 / 3.0, 0.5, 50, 50, NoiseMode::time_only);
  EXPECT_EQ(b.mode_count(), 1);
  EXPECT_THROW(eigenfunction(b, 1, 1, 0.1, 0.1), std::out_of_range);
  const QTrace t = trace_q(b);
  EXPECT_TRUE(t.scalar_brownian);
  EXPECT_EQ(t.value, 1.0);
}

TEST(TraceQ, SingleModeIsOneHalf) {
  EXPECT_DOUBLE_EQ(trace_q(SpectralBasis::make(2.0 / 3.0, 0.5, 1, 1)).value, 0.5);
}

TEST(TraceQ, Truncation50MatchesDirectSum) {
  const double t50 = trace_q(SpectralBasis{}).value;
  EXPECT_NEAR(t50, trace_by_hand(50, 50), 1e-13);
  EXPECT_NEAR(t50, 1.3323051821, 1e-9);
}

TEST(TraceQ, Truncation25Gap) {
  // the 25 -> 50 tail is about 0.032, not below 0.01
  const double t50 = trace_q(SpectralBasis{}).value;
  const double t25 = trace_q(SpectralBasis::make(2.0 / 3.0, 0.5, 25, 25)).value;
  EXPECT_NEAR(t50 - t25, trace_by_hand(50, 50) - trace_by_hand(25, 25), 1e-13);
  EXPECT_NEAR(t50 - t25, 0.0318639810, 1e-8);
}

TEST(TraceQ, LargeTruncationApproaches136) {
  const double t = trace_q(SpectralBasis::make(2.0 / 3.0, 0.5, 2000, 2000)).value;
  EXPECT_NEAR(t, 1.36, 0.006);
}

TEST(CoefficientMagnitude, Values) {
  EXPECT_NEAR(coefficient_magnitude(1, 1), 2.0 * std::sqrt(1.5), 1e-15);
  EXPECT_NEAR(coefficient_magnitude(1, 1), 2.449489742783178, 1e-15);
  EXPECT_LT(coefficient_magnitude(25, 25), 0.02);
  for (int m = 1; m < 50; ++m)
    for (int l = 1; l < 50; l += 7) EXPECT_LT(coefficient_magnitude(m + 1, l), coefficient_magnitude(m, l));
  EXPECT_THROW(coefficient_magnitude(0, 1), std::out_of_range);
}

TEST(NoiseStream, DeterministicAndOrderIndependent) {
  const NoiseStream s(42, SpectralBasis::make(2.0 / 3.0, 0.5, 5, 5));
  std::vector<double> a(25), b(25);
  s.normals(3, 17, a);
  for (int q = 24; q >= 0; --q) b[static_cast<std::size_t>(q)] = s.normal(3, 17, q);
  EXPECT_EQ(a, b);
  const NoiseStream t(42, SpectralBasis::make(2.0 / 3.0, 0.5, 5, 5));
  EXPECT_EQ(t.normal(3, 17, 4), a[4]);
  EXPECT_NE(NoiseStream(43, s.basis()).normal(3, 17, 4), a[4]);
}

TEST(NoiseStream, PathsUncorrelatedAndStandard) {
  const NoiseStream s(7, SpectralBasis::make(2.0 / 3.0, 0.5, 2, 2));
  const int n = 40000;
  double sa = 0, saa = 0, sab = 0;
  for (int k = 0; k < n; ++k) {
    const double a = s.normal(0, static_cast<std::uint64_t>(k), 1);
    const double b = s.normal(1, static_cast<std::uint64_t>(k), 1);
    sa += a;
    saa += a * a;
    sab += a * b;
  }
  EXPECT_NEAR(sa / n, 0.0, 4.0 / std::sqrt(n));
  EXPECT_NEAR(saa / n, 1.0, 4.0 * std::sqrt(2.0 / n));
  EXPECT_NEAR(sab / n, 0.0, 4.0 / std::sqrt(n));
}

TEST(IncrementSampler, ShapeAndBitIdenticalRegeneration) {
  const GridSpec g = GridSpec::make(12, 9, 1, 2.0 / 3.0, 0.5, 1.0);
  const IncrementSampler smp(NoiseStream(5, SpectralBasis{}), g);
  const IncrementField a = smp.sample_increment(2, 8, 1e-3);
  const IncrementField b = smp.sample_increment(2, 8, 1e-3);
  EXPECT_TRUE(a.values.matches(g));
  EXPECT_EQ(a.values, b.values);
  EXPECT_EQ(a.step_index, 8u);
  EXPECT_EQ(a.path_index, 2u);
  EXPECT_NE(smp.sample_increment(3, 8, 1e-3).values, a.values);
}

TEST(IncrementSampler, MatchesHandSynthesis) {
  const GridSpec g = GridSpec::make(7, 5, 1, 2.0 / 3.0, 0.5, 1.0);
  const SpectralBasis b = SpectralBasis::make(2.0 / 3.0, 0.5, 6, 4);
  const NoiseStream s(99, b);
  const IncrementSampler smp(s, g);
  const double dt = 0.004;
  const IncrementField w = smp.sample_increment(1, 3, dt);
  for (int i = 0; i < g.nx; ++i)
    for (int j = 0; j < g.ny; ++j) {
      double want = 0.0;
      for (int m = 1; m <= 6; ++m)
        for (int l = 1; l <= 4; ++l) {
          const int q = (m - 1) * 4 + (l - 1);
          want += std::sqrt(b.eta(m, l)) * e_by_hand(m, l, g.x(i), g.y(j)) * std::sqrt(dt) *
                  s.normal(1, 3, q);
        }
      EXPECT_NEAR(w.values(i, j, 0), want, 1e-13);
    }
}

TEST(IncrementSampler, NodeVarianceMatchesSpectralSum) {
  const GridSpec g = GridSpec::make(7, 5, 1, 2.0 / 3.0, 0.5, 1.0);
  const SpectralBasis b = SpectralBasis::make(2.0 / 3.0, 0.5, 10, 10);
  const IncrementSampler smp(NoiseStream(2024, b), g);
  const double dt = 0.01;
  const int draws = 100000;
  const int i = 2, j = 3;
  double sum = 0, sum2 = 0;
  for (int n = 0; n < draws; ++n) {
    const double v = smp.sample_increment(0, static_cast<std::uint64_t>(n), dt).values(i, j, 0);
    sum += v;
    sum2 += v * v;
  }
  double want = 0.0;
  for (int m = 1; m <= 10; ++m)
    for (int l = 1; l <= 10; ++l) want += dt * b.eta(m, l) * std::pow(e_by_hand(m, l, g.x(i), g.y(j)), 2);
  const double mean = sum / draws;
  EXPECT_NEAR(mean, 0.0, 4.0 * std::sqrt(want / draws));
  EXPECT_NEAR(sum2 / draws / want, 1.0, 0.03);
}

TEST(IncrementSampler, TimeOnlyIsSpatiallyConstant) {
  const GridSpec g = GridSpec::make(6, 4, 1, 2.0 / 3.0, 0.5, 1.0);
  const SpectralBasis b = SpectralBasis::make(2.0 / 3.0, 0.5, 50, 50, NoiseMode::time_only);
  const NoiseStream s(3, b);
  const IncrementSampler smp(s, g);
  const IncrementField w = smp.sample_increment(0, 0, 0.25);
  for (double v : w.values.values()) EXPECT_DOUBLE_EQ(v, 0.5 * s.normal(0, 0, 0));
}

TEST(CoarseFromFine, RatioOneIsFineIncrement) {
  const GridSpec g = GridSpec::make(6, 4, 1, 2.0 / 3.0, 0.5, 1.0);
  const IncrementSampler smp(NoiseStream(8, SpectralBasis{}), g);
  EXPECT_EQ(smp.coarse_from_fine(1, 5, 1, 0.01).values, smp.sample_increment(1, 5, 0.01).values);
}

TEST(CoarseFromFine, TwoRatioTwoEqualFourFine) {
  const GridSpec g = GridSpec::make(6, 4, 1, 2.0 / 3.0, 0.5, 1.0);
  const IncrementSampler smp(NoiseStream(8, SpectralBasis{}), g);
  const double h = 1.0 / 64;
  const Lattice coarse = smp.coarse_from_fine(0, 2, 2, h).values + smp.coarse_from_fine(0, 3, 2, h).values;
  Lattice fine(g);
  for (std::uint64_t n = 4; n < 8; ++n) fine += smp.sample_increment(0, n, h).values;
  EXPECT_LT((coarse - fine).max_abs(), 1e-14);
  const IncrementField r4 = smp.coarse_from_fine(0, 1, 4, h);
  EXPECT_LT((r4.values - fine).max_abs(), 1e-14);
  EXPECT_EQ(r4.dt_level, 2u);
  EXPECT_THROW(smp.coarse_from_fine(0, 0, 3, h), std::invalid_argument);
}

TEST(CoarseFromFine, RatioTwoDoublesVariance) {
  const GridSpec g = GridSpec::make(5, 3, 1, 2.0 / 3.0, 0.5, 1.0);
  const IncrementSampler smp(NoiseStream(31, SpectralBasis::make(2.0 / 3.0, 0.5, 4, 4)), g);
  const int draws = 40000;
  double s1 = 0, s2 = 0;
  for (int n = 0; n < draws; ++n) {
    const auto k = static_cast<std::uint64_t>(n);
    s1 += std::pow(smp.sample_increment(1, k, 0.01).values(1, 1, 0), 2);
    s2 += std::pow(smp.coarse_from_fine(2, k, 2, 0.01).values(1, 1, 0), 2);
  }
  EXPECT_NEAR(s2 / s1, 2.0, 2.0 * 4.0 * std::sqrt(4.0 / draws));
}

TEST(DiscreteTrace, SingleModeIsEtaOnFineGrid) {
  const GridSpec g = GridSpec::make(60, 45, 1, 2.0 / 3.0, 0.5, 1.0);
  const DiscreteTrace d = discrete_trace(SpectralBasis::make(2.0 / 3.0, 0.5, 1, 1), g);
  EXPECT_NEAR(d.vbar, 0.5, 0.005);
  EXPECT_GE(d.vhat, d.vbar);
}

TEST(DiscreteTrace, ReferenceGridMatchesTrace) {
  const GridSpec g = GridSpec::make(100, 75, 1, 2.0 / 3.0, 0.5, 1.0);
  const SpectralBasis b;
  const DiscreteTrace d = discrete_trace(b, g);
  // independent quadrature: dV sum_nodes sum_modes eta e^2
  double q = 0.0;
  for (int m = 1; m <= 50; ++m)
    for (int l = 1; l <= 50; ++l) {
      double sx = 0, sy = 0;
      for (int i = 0; i < g.nx; ++i) sx += std::pow(std::sin(1.5 * m * kPi * g.x(i)), 2);
      for (int j = 0; j < g.ny; ++j) sy += std::pow(std::sin(2.0 * l * kPi * g.y(j)), 2);
      q += b.eta(m, l) * 12.0 * sx * sy;
    }
  q *= g.dx() * g.dy();
  EXPECT_NEAR(d.vbar, q, 1e-12);
  EXPECT_NEAR(d.vbar / trace_q(b).value, 1.0, 0.02);
  EXPECT_GE(d.vhat, d.vbar);
  EXPECT_THROW(discrete_trace(SpectralBasis::make(2.0 / 3.0, 0.5, 5, 5, NoiseMode::time_only), g),
               std::invalid_argument);
}
