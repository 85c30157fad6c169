#include "bbopt/perturb.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "bbopt/rng.hpp"

using namespace bbopt;

namespace {

PointFn quadratic_in_u(double eps) {
  return [eps](std::span<const double> p) { return 0.5 * eps * p[0] * p[0]; };
}

PointFn linear_in_u(double eps) {
  return [eps](std::span<const double> p) { return eps * p[0]; };
}

}  // namespace

TEST(DcMetric, IdenticalEvaluatorsGiveZero) {
  const PointFn f = quadratic_in_u(0.3);
  const DcValue d = dc_metric(f, f, 1, 10, 33);
  EXPECT_EQ(d.value, 0.0);
  EXPECT_EQ(d.tail_bound, std::pow(2.0, -10));
}

TEST(DcMetric, InputValidation) {
  const PointFn f = quadratic_in_u(0.1);
  EXPECT_THROW(dc_metric(f, f, 1, 7, 33), std::invalid_argument);
  EXPECT_THROW(dc_metric(f, f, 1, 10, 8), std::invalid_argument);
  EXPECT_THROW(dc_metric(f, f, 0, 10, 33), std::invalid_argument);
}

TEST(DcMetric, TikhonovValueBound) {
  // Series value for eps·u²/2 is at most 3·eps.
  for (double eps : {1e-1, 1e-2}) {
    const DcValue d = dc_metric(quadratic_in_u(eps), nullptr, 1, 20, 65);
    EXPECT_LE(d.value, 3.0 * eps + d.tail_bound);
    EXPECT_GT(d.value, 0.0);
  }
}

TEST(DcMetric, TikhonovDerivativeBound) {
  // Series value for eps·u is at most 2·eps.
  for (double eps : {1e-1, 1e-2}) {
    const DcValue d = dc_metric(linear_in_u(eps), nullptr, 1, 20, 65);
    EXPECT_LE(d.value, 2.0 * eps + d.tail_bound);
    EXPECT_GT(d.value, 0.0);
  }
}

TEST(DcMetric, ExactSeriesValueOnLattice) {
  // For eps·u the lattice attains the sup at u = ±m, so the truncated series
  // is exactly sum 2^-m (eps·m)/(1+eps·m).
  const double eps = 0.05;
  const DcValue d = dc_metric(linear_in_u(eps), nullptr, 1, 12, 33);
  double expected = 0.0;
  for (int m = 1; m <= 12; ++m) {
    expected += std::pow(2.0, -m) * (eps * m) / (1.0 + eps * m);
  }
  EXPECT_NEAR(d.value, expected, 1e-14);
}

TEST(DcMetric, ValuesStayBelowOne) {
  Rng rng(3);
  for (int trial = 0; trial < 5; ++trial) {
    const double a = rng.uniform(0.0, 50.0);
    const PointFn f = [a](std::span<const double> p) { return a * std::cos(p[0]); };
    const DcValue d = dc_metric(f, nullptr, 1, 12, 33);
    EXPECT_LT(d.value, 1.0);
  }
}

TEST(DcMetric, SymmetryAndTriangleOnSamples) {
  const PointFn f = quadratic_in_u(0.2);
  const PointFn g = linear_in_u(0.4);
  const PointFn h = [](std::span<const double> p) { return std::sin(p[0]); };
  const auto d = [](const PointFn& a, const PointFn& b) {
    return dc_metric(a, b, 1, 10, 33).value;
  };
  EXPECT_EQ(d(f, g), d(g, f));
  EXPECT_LE(d(f, h), d(f, g) + d(g, h) + 1e-12);
}

TEST(DUpsilon, ZeroForIdenticalPairs) {
  const NonlinearPerturbation zeta = make_perturbation("tikhonov", 0.05);
  EXPECT_EQ(d_upsilon(zeta, zeta, 8, 33).value, 0.0);
}

TEST(DUpsilon, TikhonovFamilyWithinPaperBound) {
  const NonlinearPerturbation zero = zero_perturbation();
  for (double eps : {1e-1, 1e-2}) {
    const DcValue d = d_upsilon(make_perturbation("tikhonov", eps), zero, 10, 33);
    EXPECT_LE(d.value, 5.0 * eps + d.tail_bound);
    EXPECT_GT(d.value, 0.0);
  }
}

TEST(DUpsilon, MonotoneInTheFamilyParameter) {
  const NonlinearPerturbation zero = zero_perturbation();
  double prev = 0.0;
  for (double t : {0.01, 0.05, 0.2, 1.0}) {
    const double d = d_upsilon(make_perturbation("state-shift", t), zero, 8, 33).value;
    EXPECT_GT(d, prev);
    prev = d;
  }
}

TEST(DUpsilon, ScaledFamilyBoundedByLinearEnvelope) {
  // Before saturation each series term is t-homogeneous, so d(t·zeta) <= t·bound.
  const NonlinearPerturbation zero = zero_perturbation();
  const double base = d_upsilon(make_perturbation("cost-tilt", 1.0), zero, 8, 33).value;
  for (double t : {0.5, 0.1, 0.01}) {
    const double d = d_upsilon(make_perturbation("cost-tilt", t), zero, 8, 33).value;
    EXPECT_LE(d, t * 2.0 + 1e-12);  // eta_u = t: d_C = sum 2^-m t/(1+t) <= t
    EXPECT_GT(d, 0.0);
    EXPECT_LE(d, base);
  }
}

TEST(MetlemConstant, ExamplesAndValidation) {
  EXPECT_EQ(metlem_constant(0.5), 1);
  EXPECT_EQ(metlem_constant(3.0), 3);
  EXPECT_EQ(metlem_constant(2.2), 3);
  EXPECT_THROW(metlem_constant(0.0), std::invalid_argument);
}

TEST(MetlemConstant, SupNormBoundHolds) {
  // For omega with d_C(omega, 0) well below 2^-m, the sup over K ⊆ K_m obeys
  // |omega|_{L∞(K)} <= 2^m · d_C(omega, 0) · (1 + tol).
  Rng rng(11);
  const int m = metlem_constant(2.0);
  for (int trial = 0; trial < 5; ++trial) {
    const double a = rng.uniform(1e-4, 1e-3);
    const PointFn f = [a](std::span<const double> p) { return a * std::cos(3.0 * p[0]); };
    const DcValue d = dc_metric(f, nullptr, 1, 20, 65);
    ASSERT_LT(d.value, std::pow(2.0, -m));
    double sup_k = 0.0;
    for (int k = 0; k <= 200; ++k) {
      const double u = -2.0 + 4.0 * k / 200.0;
      sup_k = std::max(sup_k, std::abs(a * std::cos(3.0 * u)));
    }
    EXPECT_LE(sup_k, std::pow(2.0, m) * d.value * 1.02);
  }
}

TEST(Presets, UnknownNameRejected) {
  EXPECT_THROW(make_perturbation("nope", 0.1), std::invalid_argument);
  EXPECT_THROW(make_perturbation("smooth-bump", 0.1, {{"bump_width", -1.0}}),
               std::invalid_argument);
}

TEST(Presets, SmoothBumpShape) {
  const NonlinearPerturbation zeta = make_perturbation(
      "smooth-bump", 2.0, {{"bump_center_x", 0.25}, {"bump_center_y", 0.75}});
  ASSERT_TRUE(zeta.has_xi());
  EXPECT_FALSE(zeta.has_eta());
  EXPECT_NEAR(zeta.xi(0.25, 0.75, 0.0).v, 2.0, 1e-14);
  EXPECT_EQ(zeta.xi(0.25, 0.75, 0.0).dy, 0.0);
  EXPECT_LT(zeta.xi(0.9, 0.1, 0.0).v, 2.0e-4);
}

TEST(Membership, ViolationNamesTheSample) {
  const GridSpec grid = GridSpec::unit_square(9, 9);
  const ProblemSpec spec = make_problem("linear-tracking", grid);  // d_y = 0
  NonlinearPerturbation bad;
  bad.xi = [](double, double, double y) { return XiDeriv{-0.5 * y, -0.5}; };
  bad.label = "bad";
  try {
    check_upsilon_membership(spec, bad, 2.0, 1.0);
    FAIL() << "expected PreconditionError";
  } catch (const PreconditionError& e) {
    EXPECT_NE(std::string(e.what()).find("d_y + xi_y"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("x = ("), std::string::npos);
  }
  // state-shift with positive slope is admissible for monotone d.
  EXPECT_NO_THROW(
      check_upsilon_membership(spec, make_perturbation("state-shift", 0.3), 2.0, 1.0));
}

TEST(Membership, NonconvexEtaRejected) {
  const GridSpec grid = GridSpec::unit_square(9, 9);
  const ProblemSpec spec = make_problem("linear-tracking", grid);
  NonlinearPerturbation bad;
  bad.eta = [](double, double, double, double u) {
    return EtaDeriv{-u * u, 0.0, -2.0 * u, -2.0};
  };
  EXPECT_THROW(check_upsilon_membership(spec, bad, 1.0, 1.0), PreconditionError);
}
