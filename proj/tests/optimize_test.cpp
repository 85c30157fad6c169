#include "bbopt/optimize.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "bbopt/rng.hpp"

using namespace bbopt;

namespace {

const GridSpec kGrid = GridSpec::unit_square(17, 17);

bool is_vertex(double u, double lo, double hi, double tol = 1e-12) {
  return std::abs(u - lo) <= tol || std::abs(u - hi) <= tol;
}

}  // namespace

TEST(BangBang, ReturnsBangBangWhereSigmaIsActive) {
  const ProblemSpec spec = make_problem("linear-tracking", kGrid);
  SolveOptions opts;
  SolveStats stats;
  const OptimalitySnapshot snap = solve_bangbang(spec, opts, nullptr, nullptr, &stats);
  EXPECT_LE(stats.final_gap, opts.gap_tol);

  for (int j = 0; j < kGrid.ny; ++j) {
    for (int i = 0; i < kGrid.nx; ++i) {
      if (std::abs(snap.sigma(i, j)) > 1e-6) {
        EXPECT_TRUE(is_vertex(snap.u.field()(i, j), spec.lower(i, j), spec.upper(i, j)))
            << "node (" << i << "," << j << ") sigma=" << snap.sigma(i, j);
      }
    }
  }
}

TEST(BangBang, PontryaginResidualNonnegative) {
  const ProblemSpec spec = make_problem("cubic-monotone", kGrid);
  SolveOptions opts;
  const OptimalitySnapshot snap = solve_bangbang(spec, opts);
  double worst = 0.0;
  for (int j = 0; j < kGrid.ny; ++j) {
    for (int i = 0; i < kGrid.nx; ++i) {
      const double s = snap.sigma(i, j);
      const double u = snap.u.field()(i, j);
      worst = std::min({worst, s * (spec.lower(i, j) - u), s * (spec.upper(i, j) - u)});
    }
  }
  EXPECT_GE(worst, -1e-8);
}

TEST(BangBang, GapNonnegativeAndObjectiveMonotone) {
  const ProblemSpec spec = make_problem("bilinear-cost", kGrid);
  SolveOptions opts;
  SolveStats stats;
  solve_bangbang(spec, opts, nullptr, nullptr, &stats);
  ASSERT_FALSE(stats.gap_history.empty());
  for (double g : stats.gap_history) {
    EXPECT_GE(g, -1e-12);
  }
  for (std::size_t k = 0; k + 1 < stats.objective_history.size(); ++k) {
    EXPECT_LE(stats.objective_history[k + 1], stats.objective_history[k] + 1e-14);
  }
}

TEST(BangBang, IterationCapRaisesNonconvergence) {
  const ProblemSpec spec = make_problem("linear-tracking", kGrid);
  SolveOptions opts;
  opts.max_iters = 1;
  opts.gap_tol = 1e-14;
  EXPECT_THROW(solve_bangbang(spec, opts), NonconvergenceError);
}

TEST(BangBang, ConstantRhoShiftsOnlyTheSignChangeBand) {
  const ProblemSpec spec = make_problem("linear-tracking", kGrid);
  SolveOptions opts;
  const OptimalitySnapshot base = solve_bangbang(spec, opts);

  const double c = 0.05;
  PerturbationTriple pert = PerturbationTriple::zero(kGrid);
  pert.rho = ScalarField::constant(kGrid, c);
  const OptimalitySnapshot moved = solve_bangbang(spec, opts, &pert);

  ScalarField ds = moved.sigma;
  ds.values -= base.sigma.values;
  const double drift = norm(ds, Norm::Linf) + 1e-12;

  for (int j = 0; j < kGrid.ny; ++j) {
    for (int i = 0; i < kGrid.nx; ++i) {
      if (std::abs(moved.u.field()(i, j) - base.u.field()(i, j)) < 1e-14) continue;
      const double s = base.sigma(i, j);
      const bool sign_flip = (s > 0.0) != (s - c > 0.0);
      EXPECT_TRUE(sign_flip || std::min(std::abs(s), std::abs(s - c)) <= drift)
          << "node (" << i << "," << j << ") sigma=" << s;
    }
  }
}

TEST(Tikhonov, LargeEpsilonProjectsZero) {
  const ProblemSpec spec = make_problem("linear-tracking", kGrid);
  SolveOptions opts;
  const OptimalitySnapshot snap = solve_tikhonov(spec, 1e6, opts);
  EXPECT_LE(norm(snap.u.field(), Norm::Linf), 1e-5);
}

TEST(Tikhonov, StationarityResidualAtReturn) {
  const ProblemSpec spec = make_problem("linear-tracking", kGrid);
  SolveOptions opts;
  const double eps = 1e-2;
  const OptimalitySnapshot snap = solve_tikhonov(spec, eps, opts);

  ScalarField target = ScalarField::zero(kGrid);
  target.values = (-snap.sigma.values / eps)
                      .cwiseMax(spec.lower.values)
                      .cwiseMin(spec.upper.values);
  ScalarField diff = snap.u.field();
  diff.values -= target.values;
  EXPECT_LE(norm(diff, Norm::L1), 10.0 * opts.gap_tol);
}

TEST(Tikhonov, DistanceToBangBangShrinksWithEpsilon) {
  const ProblemSpec spec = make_problem("linear-tracking", kGrid);
  SolveOptions ref_opts;
  ref_opts.gap_tol = 1e-12;
  ref_opts.max_iters = 5000;
  const OptimalitySnapshot ref = solve_bangbang(spec, ref_opts);

  SolveOptions opts;
  double prev = std::numeric_limits<double>::infinity();
  for (double eps : {1e-1, 3e-2, 1e-2, 3e-3, 1e-3}) {
    const OptimalitySnapshot snap = solve_tikhonov(spec, eps, opts);
    ScalarField du = snap.u.field();
    du.values -= ref.u.values();
    const double dist = norm(du, Norm::L1);
    EXPECT_LE(dist, prev + 1e-6);
    prev = dist;
  }
}

TEST(Tikhonov, RejectsNonpositiveEpsilon) {
  const ProblemSpec spec = make_problem("linear-tracking", kGrid);
  SolveOptions opts;
  EXPECT_THROW(solve_tikhonov(spec, 0.0, opts), std::invalid_argument);
}

TEST(NonlinearPerturbed, ZeroPerturbationMatchesBangBangExactly) {
  const ProblemSpec spec = make_problem("cubic-monotone", kGrid);
  SolveOptions opts;
  const OptimalitySnapshot base = solve_bangbang(spec, opts);
  const OptimalitySnapshot viaz = solve_nonlinear_perturbed(spec, zero_perturbation(), opts);
  EXPECT_EQ((base.u.values() - viaz.u.values()).lpNorm<Eigen::Infinity>(), 0.0);
  EXPECT_EQ((base.y.values - viaz.y.values).lpNorm<Eigen::Infinity>(), 0.0);
}

TEST(NonlinearPerturbed, StateShiftMatchesModifiedProblem) {
  const double c = 0.4;
  const ProblemSpec spec = make_problem("cubic-monotone", kGrid);

  ProblemSpec shifted = spec;
  const CoefficientFn base_d = spec.d;
  shifted.d = [base_d, c](double x1, double x2, double y) {
    Deriv2 out = base_d(x1, x2, y);
    out.v += c * y;
    out.dy += c;
    return out;
  };
  SolveOptions opts;
  const OptimalitySnapshot oracle = solve_bangbang(shifted, opts);
  const OptimalitySnapshot snap =
      solve_nonlinear_perturbed(spec, make_perturbation("state-shift", c), opts);
  EXPECT_LE((snap.u.values() - oracle.u.values()).lpNorm<Eigen::Infinity>(), 1e-9);
  EXPECT_LE((snap.y.values - oracle.y.values).lpNorm<Eigen::Infinity>(), 1e-9);
}

TEST(NonlinearPerturbed, TikhonovFamilyReproducesSolveTikhonov) {
  const ProblemSpec spec = make_problem("linear-tracking", kGrid);
  SolveOptions opts;
  const double eps = 5e-3;
  const OptimalitySnapshot a = solve_tikhonov(spec, eps, opts);
  const OptimalitySnapshot b =
      solve_nonlinear_perturbed(spec, make_perturbation("tikhonov", eps), opts);
  EXPECT_EQ((a.u.values() - b.u.values()).lpNorm<Eigen::Infinity>(), 0.0);
}

TEST(NonlinearPerturbed, MembershipGuardFires) {
  const ProblemSpec spec = make_problem("linear-tracking", kGrid);  // d_y = 0
  NonlinearPerturbation bad;
  bad.xi = [](double, double, double y) { return XiDeriv{-y, -1.0}; };
  bad.label = "bad";
  SolveOptions opts;
  EXPECT_THROW(solve_nonlinear_perturbed(spec, bad, opts), PreconditionError);
}

TEST(SnapshotIO, RoundTripsBitExactly) {
  const ProblemSpec spec = make_problem("linear-tracking", kGrid);
  SolveOptions opts;
  const OptimalitySnapshot snap = solve_bangbang(spec, opts);
  const std::string path = ::testing::TempDir() + "bbopt_snapshot_roundtrip.bbsnap";
  save_snapshot(path, snap);
  const OptimalitySnapshot back = load_snapshot(path, spec);
  EXPECT_EQ((back.u.values() - snap.u.values()).lpNorm<Eigen::Infinity>(), 0.0);
  EXPECT_EQ((back.y.values - snap.y.values).lpNorm<Eigen::Infinity>(), 0.0);
  EXPECT_EQ((back.p.values - snap.p.values).lpNorm<Eigen::Infinity>(), 0.0);
  EXPECT_EQ((back.sigma.values - snap.sigma.values).lpNorm<Eigen::Infinity>(), 0.0);
  EXPECT_EQ(back.state_residual, snap.state_residual);

  const ProblemSpec other = make_problem("linear-tracking", GridSpec::unit_square(9, 9));
  EXPECT_THROW(load_snapshot(path, other), GridMismatchError);
}
