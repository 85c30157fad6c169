#pragma once

#include <optional>
#include <vector>

#include "bbopt/problem.hpp"

namespace bbopt {

/// A candidate stationary triple (y, p, u) with its switching function and
/// the residuals the solves left behind. sigma is recomputable from the
/// components: sigma = s(·,y) + β∘p nodewise.
struct OptimalitySnapshot {
  ControlField u;
  ScalarField y;
  ScalarField p;
  ScalarField sigma;
  double state_residual = 0.0;
  double adjoint_residual = 0.0;
};

struct NewtonOptions {
  double tol = 1e-10;     ///< Linf residual target
  int max_iters = 50;
  int max_halvings = 30;  ///< residual-monotone damping
};

/// Convergence history of one Newton run.
struct NewtonReport {
  int iters = 0;
  std::vector<double> residuals;
};

/// Solve the semilinear state equation  ℒy + d(·,y) = β∘u + lift  by damped
/// Newton; every step is one shifted solve with α = d_y(·,y_k) ≥ 0.
/// Throws NonconvergenceError (with the residual history) past max_iters.
ScalarField solve_state(const ProblemSpec& spec, const ControlField& u,
                        const ScalarField* lift = nullptr,
                        const NewtonOptions& opts = {}, NewtonReport* report = nullptr);

/// Adjoint equation  ℒp + d_y(·,y)∘p = w_y(·,y) + s_y(·,y)∘u + lift,
/// a single shifted solve against the converged state y.
ScalarField solve_adjoint(const ProblemSpec& spec, const ControlField& u,
                          const ScalarField& y, const ScalarField* lift = nullptr);

/// Switching function σ = s(·,y) + β∘p.
ScalarField switching(const ProblemSpec& spec, const ScalarField& y, const ScalarField& p);

/// State + adjoint + switching function at u, with residuals.
OptimalitySnapshot evaluate_control(const ProblemSpec& spec, const ControlField& u,
                                    const ScalarField* state_lift = nullptr,
                                    const ScalarField* adjoint_lift = nullptr);

/// Discrete objective  Σ w∘[w(x,y) + s(x,y)∘u]  at a converged state y.
double objective(const ProblemSpec& spec, const ControlField& u, const ScalarField& y);

/// Linearized state:  ℒz + d_y(·,ȳ)∘z = β∘v.
ScalarField solve_linearized_state(const ProblemSpec& spec, const OptimalitySnapshot& at,
                                   const ScalarField& v);

/// Linearized adjoint:  ℒq + d_y(·,ȳ)∘q = H_yy∘z_v + H_yu∘v.
ScalarField solve_linearized_adjoint(const ProblemSpec& spec, const OptimalitySnapshot& at,
                                     const ScalarField& v, const ScalarField& z_v);

/// π_v = H_uy∘z_v + H_up∘q_v = s_y(·,ȳ)∘z_v + β∘q_v.
ScalarField pi_of(const ProblemSpec& spec, const OptimalitySnapshot& at, const ScalarField& v);

}  // namespace bbopt
