#include "bbopt/solvers.hpp"

#include <cmath>

namespace bbopt {

namespace {

// Residual of F(y) = apply(ℒ,y) + d(·,y) − rhs in nodal (h-scale) units.
Eigen::VectorXd state_residual_vec(const ProblemSpec& spec, const ScalarField& y,
                                   const Eigen::VectorXd& rhs) {
  Eigen::VectorXd out = spec.op.apply(y).values - rhs;
  for (int j = 0; j < spec.grid.ny; ++j) {
    for (int i = 0; i < spec.grid.nx; ++i) {
      out[spec.grid.node(i, j)] += spec.d(spec.grid.x1(i), spec.grid.x2(j), y(i, j)).v;
    }
  }
  return out;
}

}  // namespace

ScalarField solve_state(const ProblemSpec& spec, const ControlField& u,
                        const ScalarField* lift, const NewtonOptions& opts,
                        NewtonReport* report) {
  Eigen::VectorXd rhs = spec.beta.values.cwiseProduct(u.values());
  if (lift != nullptr) {
    require_same_grid(*lift, spec.beta);
    rhs += lift->values;
  }

  ScalarField y = ScalarField::zero(spec.grid);
  Eigen::VectorXd f = state_residual_vec(spec, y, rhs);
  double res = f.lpNorm<Eigen::Infinity>();
  std::vector<double> history{res};

  int it = 0;
  for (; it < opts.max_iters && res > opts.tol; ++it) {
    ScalarField alpha = spec.eval(spec.d, y).dy;  // d_y(·,y_k) >= 0
    const ScalarField delta =
        spec.op.solve_shifted(alpha, ScalarField{spec.grid, -f});

    // Half the step while the residual grows.
    double theta = 1.0;
    ScalarField y_next = y;
    Eigen::VectorXd f_next;
    double res_next = 0.0;
    for (int half = 0; half <= opts.max_halvings; ++half) {
      y_next.values = y.values + theta * delta.values;
      f_next = state_residual_vec(spec, y_next, rhs);
      res_next = f_next.lpNorm<Eigen::Infinity>();
      if (res_next < res || res_next <= opts.tol) break;
      theta *= 0.5;
    }
    y = y_next;
    f = std::move(f_next);
    res = res_next;
    history.push_back(res);
  }

  if (report != nullptr) {
    report->iters = it;
    report->residuals = history;
  }
  if (res > opts.tol) {
    throw NonconvergenceError("solve_state: Newton did not reach tolerance", history);
  }
  return y;
}

ScalarField solve_adjoint(const ProblemSpec& spec, const ControlField& u,
                          const ScalarField& y, const ScalarField* lift) {
  const auto dd = spec.eval(spec.d, y);
  const auto ww = spec.eval(spec.w, y);
  const auto ss = spec.eval(spec.s, y);
  ScalarField rhs = ScalarField::zero(spec.grid);
  rhs.values = ww.dy.values + ss.dy.values.cwiseProduct(u.values());
  if (lift != nullptr) {
    require_same_grid(*lift, rhs);
    rhs.values += lift->values;
  }
  return spec.op.solve_shifted(dd.dy, rhs);
}

ScalarField switching(const ProblemSpec& spec, const ScalarField& y, const ScalarField& p) {
  require_same_grid(y, p);
  const auto ss = spec.eval(spec.s, y);
  ScalarField out = ScalarField::zero(spec.grid);
  out.values = ss.v.values + spec.beta.values.cwiseProduct(p.values);
  return out;
}

OptimalitySnapshot evaluate_control(const ProblemSpec& spec, const ControlField& u,
                                    const ScalarField* state_lift,
                                    const ScalarField* adjoint_lift) {
  ScalarField y = solve_state(spec, u, state_lift);
  ScalarField p = solve_adjoint(spec, u, y, adjoint_lift);

  Eigen::VectorXd rhs = spec.beta.values.cwiseProduct(u.values());
  if (state_lift != nullptr) rhs += state_lift->values;
  const double sres = state_residual_vec(spec, y, rhs).lpNorm<Eigen::Infinity>();

  const auto dd = spec.eval(spec.d, y);
  const auto ww = spec.eval(spec.w, y);
  const auto ss = spec.eval(spec.s, y);
  Eigen::VectorXd ares = spec.op.apply(p).values +
                         dd.dy.values.cwiseProduct(p.values) - ww.dy.values -
                         ss.dy.values.cwiseProduct(u.values());
  if (adjoint_lift != nullptr) ares -= adjoint_lift->values;

  ScalarField sigma = switching(spec, y, p);
  return OptimalitySnapshot{u, std::move(y), std::move(p), std::move(sigma), sres,
                            ares.lpNorm<Eigen::Infinity>()};
}

double objective(const ProblemSpec& spec, const ControlField& u, const ScalarField& y) {
  double acc = 0.0;
  const GridSpec& g = spec.grid;
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      const double x1 = g.x1(i);
      const double x2 = g.x2(j);
      acc += g.quad_weight(i, j) *
             (spec.w(x1, x2, y(i, j)).v + spec.s(x1, x2, y(i, j)).v * u.field()(i, j));
    }
  }
  return acc;
}

ScalarField solve_linearized_state(const ProblemSpec& spec, const OptimalitySnapshot& at,
                                   const ScalarField& v) {
  require_same_grid(v, at.y);
  const ScalarField alpha = spec.eval(spec.d, at.y).dy;
  ScalarField rhs = ScalarField::zero(spec.grid);
  rhs.values = spec.beta.values.cwiseProduct(v.values);
  return spec.op.solve_shifted(alpha, rhs);
}

ScalarField solve_linearized_adjoint(const ProblemSpec& spec, const OptimalitySnapshot& at,
                                     const ScalarField& v, const ScalarField& z_v) {
  require_same_grid(v, z_v);
  const auto h = hamiltonian_derivatives(spec, at.y, at.p, at.u.field());
  const ScalarField alpha = spec.eval(spec.d, at.y).dy;
  ScalarField rhs = ScalarField::zero(spec.grid);
  rhs.values = h.H_yy.values.cwiseProduct(z_v.values) + h.H_yu.values.cwiseProduct(v.values);
  return spec.op.solve_shifted(alpha, rhs);
}

ScalarField pi_of(const ProblemSpec& spec, const OptimalitySnapshot& at, const ScalarField& v) {
  const ScalarField z = solve_linearized_state(spec, at, v);
  const ScalarField q = solve_linearized_adjoint(spec, at, v, z);
  const ScalarField s_y = spec.eval(spec.s, at.y).dy;
  ScalarField out = ScalarField::zero(spec.grid);
  out.values = s_y.values.cwiseProduct(z.values) + spec.beta.values.cwiseProduct(q.values);
  return out;
}

}  // namespace bbopt
