#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include <gtest/gtest.h>

#include "smx/mesh_ops.hpp"

using namespace smx;

namespace {

constexpr double kPi = std::numbers::pi;

Lattice random_lattice(const GridSpec& g, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Lattice f(g);
  for (std::size_t n = 0; n < f.size(); ++n) f[n] = u(rng);
  return f;
}

}  // namespace

TEST(GridSpec, SpacingTimesCountIsLength) {
  const GridSpec g = GridSpec::make(100, 75, 1, 2.0 / 3.0, 0.5, 1.0);
  EXPECT_NEAR(g.dx() * g.nx, g.lx, 1e-15);
  EXPECT_NEAR(g.dy() * g.ny, g.ly, 1e-15);
  EXPECT_NEAR(g.dz() * g.nz, g.lz, 1e-15);
  EXPECT_EQ(g.node_count(), 7500u);
  EXPECT_EQ(g.active_axis_count(), 2);
  EXPECT_FALSE(g.active(Axis::z));
}

TEST(GridSpec, RejectsBadCounts) {
  EXPECT_THROW(GridSpec::make(0, 4, 1, 1, 1, 1), std::invalid_argument);
  EXPECT_THROW(GridSpec::make(4, 4, 1, 1, -1, 1), std::invalid_argument);
}

TEST(GridSpec, IndexWraps) {
  const GridSpec g = GridSpec::make(4, 3, 2, 1, 1, 1);
  EXPECT_EQ(g.index(-1, 0, 0), g.index(3, 0, 0));
  EXPECT_EQ(g.index(0, 3, 0), g.index(0, 0, 0));
  EXPECT_EQ(g.index(1, 2, 1), 1u + 4u * 2u + 12u);
}

TEST(Differences, ConstantGoesToZero) {
  const GridSpec g = GridSpec::make(7, 5, 3, 1, 2, 3);
  const Lattice c(g, 4.25);
  for (Axis a : kAllAxes) {
    EXPECT_EQ(forward_diff(g, c, a).max_abs(), 0.0);
    EXPECT_EQ(backward_diff(g, c, a).max_abs(), 0.0);
    EXPECT_EQ(centered_diff(g, c, a).max_abs(), 0.0);
  }
}

TEST(Differences, SingleLayerAxisIsExactlyZero) {
  const GridSpec g = GridSpec::make(6, 5, 1, 1, 1, 1);
  const Lattice f = random_lattice(g, 3);
  EXPECT_EQ(forward_diff(g, f, Axis::z).max_abs(), 0.0);
  EXPECT_EQ(centered_diff(g, f, Axis::z).max_abs(), 0.0);
  EXPECT_EQ(half_average(g, f, {Axis::z}), f);
}

TEST(Differences, ForwardDiffOfSineMatchesPointFormula) {
  const GridSpec g = GridSpec::make(64, 1, 1, 2.0 / 3.0, 1, 1);
  Lattice f(g);
  for (int i = 0; i < g.nx; ++i) f(i, 0, 0) = std::sin(2 * kPi * g.x(i) / g.lx);
  const Lattice d = forward_diff(g, f, Axis::x);
  for (int i = 0; i < g.nx; ++i) {
    const double want =
        (std::sin(2 * kPi * (g.x(i) + g.dx()) / g.lx) - std::sin(2 * kPi * g.x(i) / g.lx)) / g.dx();
    EXPECT_NEAR(d(i, 0, 0), want, 1e-12) << i;
  }
}

TEST(Differences, CenteredDiffFourierSymbol) {
  // real and imaginary parts of exp(2 pi i q j / n) handled separately
  const int n = 24, q = 5;
  const GridSpec g = GridSpec::make(n, 1, 1, 1.5, 1, 1);
  Lattice re(g), im(g);
  for (int i = 0; i < n; ++i) {
    re(i, 0, 0) = std::cos(2 * kPi * q * i / n);
    im(i, 0, 0) = std::sin(2 * kPi * q * i / n);
  }
  const double s = std::sin(2 * kPi * q / n) / g.dx();
  const Lattice dre = centered_diff(g, re, Axis::x);
  const Lattice dim = centered_diff(g, im, Axis::x);
  // i s (re + i im) = -s im + i s re
  for (int i = 0; i < n; ++i) {
    EXPECT_NEAR(dre(i, 0, 0), -s * im(i, 0, 0), 1e-12);
    EXPECT_NEAR(dim(i, 0, 0), s * re(i, 0, 0), 1e-12);
  }
}

TEST(Differences, SummationByParts) {
  const GridSpec g = GridSpec::make(9, 7, 4, 1.0, 0.7, 0.3);
  const Lattice f = random_lattice(g, 11), h = random_lattice(g, 12);
  for (Axis a : kAllAxes) {
    const double lhs = grid_inner(g, centered_diff(g, f, a), h);
    const double rhs = -grid_inner(g, f, centered_diff(g, h, a));
    EXPECT_NEAR(lhs, rhs, 1e-13);
    EXPECT_NEAR(grid_inner(g, forward_diff(g, f, a), h), -grid_inner(g, f, backward_diff(g, h, a)),
                1e-13);
  }
}

TEST(HalfAverage, ConstantStaysConstant) {
  const GridSpec g = GridSpec::make(5, 4, 3, 1, 1, 1);
  const Lattice c(g, -2.5);
  const Lattice a = half_average(g, c, {Axis::x, Axis::y, Axis::z});
  for (double v : a.values()) EXPECT_DOUBLE_EQ(v, -2.5);
}

TEST(HalfAverage, LinearRampWrapsAtSeam) {
  const GridSpec g = GridSpec::make(4, 1, 1, 4, 1, 1);
  Lattice f(g);
  for (int i = 0; i < 4; ++i) f(i, 0, 0) = i;
  const Lattice fwd = half_average(g, f, {Axis::x});
  EXPECT_DOUBLE_EQ(fwd(0, 0, 0), 0.5);
  EXPECT_DOUBLE_EQ(fwd(2, 0, 0), 2.5);
  EXPECT_DOUBLE_EQ(fwd(3, 0, 0), 1.5);  // (3 + 0) / 2
  const Lattice bwd = half_average(g, f, {Axis::x}, HalfSide::backward);
  EXPECT_DOUBLE_EQ(bwd(0, 0, 0), 1.5);
  EXPECT_DOUBLE_EQ(bwd(1, 0, 0), 0.5);
}

TEST(HalfAverage, TwoAxesEqualsSequential) {
  const GridSpec g = GridSpec::make(6, 5, 1, 1, 1, 1);
  const Lattice f = random_lattice(g, 5);
  const Lattice both = half_average(g, f, {Axis::x, Axis::y});
  const Lattice seq = half_average(g, half_average(g, f, {Axis::x}), {Axis::y});
  EXPECT_LT((both - seq).max_abs(), 1e-15);
}

TEST(Stencil, CompositionMatchesSequentialApplication) {
  const GridSpec g = GridSpec::make(7, 6, 1, 1, 1, 1);
  const Lattice f = random_lattice(g, 9);
  const Stencil dx = Stencil::forward_diff(Axis::x, g.dx());
  const Stencil ay = Stencil::forward_average(Axis::y);
  const Lattice seq = dx.apply(ay.apply(f));
  EXPECT_LT(((dx * ay).apply(f) - seq).max_abs(), 1e-12);
  const Stencil c = Stencil::centered_diff(Axis::x, g.dx());
  const Stencil avg = 0.5 * (Stencil::forward_diff(Axis::x, g.dx()) +
                             Stencil::backward_diff(Axis::x, g.dx()));
  EXPECT_LT((c.apply(f) - avg.apply(f)).max_abs(), 1e-12);
}

TEST(PairwiseSum, OrderFixedAndAccurate) {
  std::vector<double> v(1001, 0.1);
  EXPECT_NEAR(pairwise_sum(v), 100.1, 1e-12);
  EXPECT_EQ(pairwise_sum({}), 0.0);
}
