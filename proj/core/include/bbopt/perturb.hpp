#pragma once

#include <functional>
#include <map>
#include <span>
#include <string>

#include "bbopt/problem.hpp"

namespace bbopt {

/// ξ(x, y) and its y-derivative.
struct XiDeriv {
  double v = 0.0;
  double dy = 0.0;
};

/// η(x, y, u) with the derivatives the perturbed system needs.
struct EtaDeriv {
  double v = 0.0;
  double dy = 0.0;
  double du = 0.0;
  double duu = 0.0;
};

/// A nonlinear perturbation ζ = (ξ, η) of the problem: ξ shifts the state
/// equation (membership requires d_y + ξ_y ≥ 0), η shifts the cost
/// (membership requires η convex in u). Null evaluators mean zero.
struct NonlinearPerturbation {
  std::function<XiDeriv(double x1, double x2, double y)> xi;
  std::function<EtaDeriv(double x1, double x2, double y, double u)> eta;
  std::string label;

  bool has_xi() const { return static_cast<bool>(xi); }
  bool has_eta() const { return static_cast<bool>(eta); }
};

NonlinearPerturbation zero_perturbation();

/// Named perturbation families:
///   "tikhonov"    η = magnitude·u²/2
///   "state-shift" ξ = magnitude·y
///   "cost-tilt"   η = magnitude·u
///   "smooth-bump" ξ = magnitude·exp(−((x1−cx)² + (x2−cy)²)/width²)
/// params may carry bump_center_x, bump_center_y, bump_width.
NonlinearPerturbation make_perturbation(const std::string& name, double magnitude,
                                        const std::map<std::string, double>& params = {});

/// Spot-check Υ membership of ζ on a sampled box: d_y + ξ_y ≥ 0 and η_uu ≥ 0
/// over x ∈ [0,1]², |y| ≤ y_bound, |u| ≤ u_bound. Throws PreconditionError
/// naming the offending sample.
void check_upsilon_membership(const ProblemSpec& spec, const NonlinearPerturbation& zeta,
                              double y_bound, double u_bound);

/// A truncated d_C value with its series-truncation uncertainty (the dropped
/// tail is at most 2^−m_max). The lattice max under-approximates each sup by
/// O(lattice step × Lipschitz constant); that bias is documented, not folded
/// into the uncertainty.
struct DcValue {
  double value = 0.0;
  double tail_bound = 0.0;
};

/// Pointwise evaluator on ℝ^s.
using PointFn = std::function<double(std::span<const double>)>;

/// Compact-convergence metric
///   d_C(ω₁, ω₂) = Σ_m 2^−m · r_m / (1 + r_m),  r_m = |ω₁ − ω₂|_{L∞(K_m)},
/// truncated at m_max; each sup is approximated by the max over a uniform
/// lattice. The first domain_dims coordinates are sampled over [0,1] (the
/// spatial domain never leaves K_1); the rest over [−m, m].
/// Requires m_max ≥ 8 and samples_per_axis ≥ 33.
DcValue dc_metric(const PointFn& omega1, const PointFn& omega2, int dims, int m_max,
                  int samples_per_axis, int domain_dims = 0);

/// d_Υ(ζ, ζ′) = d_C(ξ, ξ′) + d_C(ξ_y, ξ_y′) + d_C(η_y, η_y′) + d_C(η_u, η_u′),
/// with ξ terms over (x, y) and η terms over (x, y, u).
DcValue d_upsilon(const NonlinearPerturbation& zeta, const NonlinearPerturbation& zeta_ref,
                  int m_max, int samples_per_axis);

/// Smallest m with K ⊆ K_m for K contained in the ball of radius k_bound;
/// used to convert d_Υ smallness into sup-norm smallness on a solution range.
int metlem_constant(double k_bound);

}  // namespace bbopt
