#include "bbopt/grid.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "bbopt/rng.hpp"

using namespace bbopt;

namespace {

ScalarField random_field(const GridSpec& g, Rng& rng, double lo = -1.0, double hi = 1.0) {
  ScalarField f = ScalarField::zero(g);
  for (int k = 0; k < g.num_nodes(); ++k) f.values[k] = rng.uniform(lo, hi);
  return f;
}

}  // namespace

TEST(GridSpec, RejectsTinyGrids) {
  EXPECT_THROW(GridSpec::unit_square(2, 5), std::invalid_argument);
  EXPECT_THROW(GridSpec::unit_square(5, 1), std::invalid_argument);
}

TEST(GridSpec, QuadratureWeightsSumToDomainMeasure) {
  for (int n : {3, 4, 17, 33}) {
    const GridSpec g = GridSpec::unit_square(n, n + 1);
    EXPECT_DOUBLE_EQ(g.quad_weights().sum(), 1.0);
  }
}

TEST(GridSpec, RimWeightsSumToPerimeter) {
  const GridSpec g = GridSpec::unit_square(9, 13);
  double acc = 0.0;
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) acc += g.rim_weight(i, j);
  }
  EXPECT_NEAR(acc, 4.0, 1e-14);
}

TEST(Norms, ConstantFieldL1IsExact) {
  const GridSpec g = GridSpec::unit_square(17, 17);
  EXPECT_DOUBLE_EQ(norm(ScalarField::constant(g, 1.0), Norm::L1), 1.0);
}

TEST(Norms, ZeroFieldAllKinds) {
  const GridSpec g = GridSpec::unit_square(9, 9);
  const ScalarField z = ScalarField::zero(g);
  EXPECT_EQ(norm(z, Norm::L1), 0.0);
  EXPECT_EQ(norm(z, Norm::L2), 0.0);
  EXPECT_EQ(norm(z, Norm::Linf), 0.0);
}

TEST(Norms, SineProductL2MatchesClosedForm) {
  const GridSpec g = GridSpec::unit_square(65, 65);
  const ScalarField f = ScalarField::from_function(g, [](double x1, double x2) {
    return std::sin(std::numbers::pi * x1) * std::sin(std::numbers::pi * x2);
  });
  EXPECT_NEAR(norm(f, Norm::L2), 0.5, 1e-3);
}

TEST(Norms, DiscreteHoelderChain) {
  const GridSpec g = GridSpec::unit_square(21, 19);
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const ScalarField f = random_field(g, rng, -3.0, 3.0);
    EXPECT_LE(norm(f, Norm::L1), norm(f, Norm::L2) + 1e-14);
    EXPECT_LE(norm(f, Norm::L2), norm(f, Norm::Linf) + 1e-14);
  }
}

TEST(InnerProduct, ConstantsAndZero) {
  const GridSpec g = GridSpec::unit_square(17, 17);
  const ScalarField one = ScalarField::constant(g, 1.0);
  EXPECT_DOUBLE_EQ(inner_product(one, one), 1.0);
  Rng rng(3);
  const ScalarField f = random_field(g, rng);
  EXPECT_EQ(inner_product(f, ScalarField::zero(g)), 0.0);
}

TEST(InnerProduct, SineSquaredMatchesClosedForm) {
  const GridSpec g = GridSpec::unit_square(65, 65);
  const ScalarField f = ScalarField::from_function(
      g, [](double x1, double) { return std::sin(std::numbers::pi * x1); });
  EXPECT_NEAR(inner_product(f, f), 0.5, 1e-3);
}

TEST(InnerProduct, SymmetricAndBilinear) {
  const GridSpec g = GridSpec::unit_square(11, 13);
  Rng rng(11);
  const ScalarField f = random_field(g, rng);
  const ScalarField h = random_field(g, rng);
  ScalarField combo = ScalarField::zero(g);
  combo.values = 2.0 * f.values + 3.0 * h.values;

  EXPECT_DOUBLE_EQ(inner_product(f, h), inner_product(h, f));
  EXPECT_NEAR(inner_product(combo, h), 2.0 * inner_product(f, h) + 3.0 * inner_product(h, h),
              1e-13);
}

TEST(InnerProduct, GridMismatchThrows) {
  const ScalarField a = ScalarField::zero(GridSpec::unit_square(5, 5));
  const ScalarField b = ScalarField::zero(GridSpec::unit_square(7, 5));
  EXPECT_THROW(inner_product(a, b), GridMismatchError);
}

TEST(LevelSet, TrivialCases) {
  const GridSpec g = GridSpec::unit_square(17, 17);
  EXPECT_EQ(measure_level_set(ScalarField::constant(g, 5.0), 1.0), 0.0);
  EXPECT_DOUBLE_EQ(measure_level_set(ScalarField::zero(g), 1.0), 1.0);
  EXPECT_THROW(measure_level_set(ScalarField::zero(g), 0.0), std::invalid_argument);
}

TEST(LevelSet, LinearBandMatchesAnalyticMeasure) {
  const GridSpec g = GridSpec::unit_square(129, 129);
  const ScalarField sigma =
      ScalarField::from_function(g, [](double x1, double) { return x1 - 0.5; });
  EXPECT_NEAR(measure_level_set(sigma, 0.1), 0.2, 2.0 * g.hx);
}

TEST(LevelSet, MonotoneAndBounded) {
  const GridSpec g = GridSpec::unit_square(33, 33);
  Rng rng(23);
  const ScalarField sigma = random_field(g, rng, -2.0, 2.0);
  double prev = 0.0;
  for (double eps : {0.01, 0.1, 0.5, 1.0, 2.0, 5.0}) {
    const double m = measure_level_set(sigma, eps);
    EXPECT_GE(m, prev);
    EXPECT_LE(m, 1.0);
    prev = m;
  }
}
