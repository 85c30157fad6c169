#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bbopt/perturb.hpp"
#include "bbopt/solvers.hpp"

namespace bbopt {

struct SolveOptions {
  int max_iters = 2000;
  double gap_tol = 1e-10;        ///< primal-gap (or fixed-point L1) stopping
  std::string damping = "armijo";
  std::uint64_t seed = 0;
  double tie_tol = 1e-12;        ///< σ band where the vertex rule keeps u_k
};

/// Iteration record of one descent run. For bang-bang solves `gap` is the
/// primal gap ∫(σ−ρ)(u−ŵ); for convex-regularized solves it is the
/// fixed-point residual ‖u − ŵ‖_L1.
struct SolveStats {
  int iters = 0;
  double final_gap = 0.0;
  std::vector<double> gap_history;
  std::vector<double> objective_history;
};

/// Linear perturbation ζ = (ξ, η, ρ) of the optimality system: ξ shifts the
/// state equation, η the adjoint equation, ρ the variational inequality.
struct PerturbationTriple {
  ScalarField xi;
  ScalarField eta;
  ScalarField rho;

  static PerturbationTriple zero(const GridSpec& g) {
    return {ScalarField::zero(g), ScalarField::zero(g), ScalarField::zero(g)};
  }
};

/// Conditional-gradient solve of the (possibly perturbed) variational
/// inequality: the vertex step is the exact pointwise minimizer of the
/// Hamiltonian over [b1, b2], the primal gap ∫(σ−ρ)(u_k−ŵ_k) is the stopping
/// residual, and steps are Armijo-backtracked on the perturbed objective.
OptimalitySnapshot solve_bangbang(const ProblemSpec& spec, const SolveOptions& opts,
                                  const PerturbationTriple* perturbation = nullptr,
                                  const ControlField* start = nullptr,
                                  SolveStats* stats = nullptr);

/// Tikhonov-regularized solve: damped fixed-point iteration
/// u ← (1−θ)u + θ·clamp(−σ_u/ε) with θ by objective backtracking, stopping on
/// the L1 fixed-point residual.
OptimalitySnapshot solve_tikhonov(const ProblemSpec& spec, double epsilon,
                                  const SolveOptions& opts,
                                  const ControlField* warm_start = nullptr,
                                  SolveStats* stats = nullptr);

/// Solve under a nonlinear perturbation ζ = (ξ, η): the state operator
/// becomes d + ξ, the adjoint picks up η_y, and the pointwise subproblem
/// minimizes (σ + η_u)·w + η(x,y,w) over the bounds — the vertex rule when η
/// is affine in u, the Tikhonov-style pointwise minimization when η_uu > 0.
/// Υ membership (d_y + ξ_y ≥ 0, η_uu ≥ 0) is spot-checked up front.
OptimalitySnapshot solve_nonlinear_perturbed(const ProblemSpec& spec,
                                             const NonlinearPerturbation& zeta,
                                             const SolveOptions& opts,
                                             const ControlField* warm_start = nullptr,
                                             SolveStats* stats = nullptr);

/// Snapshot cache file (flat binary, see README for the field order).
void save_snapshot(const std::string& path, const OptimalitySnapshot& snap);
OptimalitySnapshot load_snapshot(const std::string& path, const ProblemSpec& spec);

}  // namespace bbopt
