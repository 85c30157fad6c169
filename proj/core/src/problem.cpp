#include "bbopt/problem.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace bbopt {

PresetParams PresetParams::from_map(const std::map<std::string, double>& kv) {
  PresetParams p;
  for (const auto& [key, value] : kv) {
    if (key == "a_value") p.a_value = value;
    else if (key == "b_value") p.b_value = value;
    else if (key == "beta_value") p.beta_value = value;
    else if (key == "lower") p.lower = value;
    else if (key == "upper") p.upper = value;
    else if (key == "s0_scale") p.s0_scale = value;
    else if (key == "s0_offset") p.s0_offset = value;
    else if (key == "yd_amplitude") p.yd_amplitude = value;
    else throw std::invalid_argument("unknown preset parameter: " + key);
  }
  return p;
}

ProblemSpec::CoeffFields ProblemSpec::eval(const CoefficientFn& fn,
                                           const ScalarField& y) const {
  if (!(y.grid == grid)) {
    throw GridMismatchError("eval: state field does not live on the problem grid");
  }
  CoeffFields out{ScalarField::zero(grid), ScalarField::zero(grid),
                  ScalarField::zero(grid)};
  for (int j = 0; j < grid.ny; ++j) {
    for (int i = 0; i < grid.nx; ++i) {
      const Deriv2 d2 = fn(grid.x1(i), grid.x2(j), y(i, j));
      out.v(i, j) = d2.v;
      out.dy(i, j) = d2.dy;
      out.dyy(i, j) = d2.dyy;
    }
  }
  return out;
}

ControlField project_admissible(const ScalarField& v, const ProblemSpec& spec) {
  if (!(v.grid == spec.grid)) {
    throw GridMismatchError("project_admissible: field does not live on the problem grid");
  }
  ScalarField out = v;
  out.values = out.values.cwiseMax(spec.lower.values).cwiseMin(spec.upper.values);
  return ControlField(std::move(out));
}

HamiltonianDerivs hamiltonian_derivatives(const ProblemSpec& spec, const ScalarField& y,
                                          const ScalarField& p, const ScalarField& u) {
  require_same_grid(y, p);
  require_same_grid(y, u);
  const auto dd = spec.eval(spec.d, y);
  const auto ww = spec.eval(spec.w, y);
  const auto ss = spec.eval(spec.s, y);

  HamiltonianDerivs out{ScalarField::zero(spec.grid), ScalarField::zero(spec.grid),
                        ScalarField::zero(spec.grid), ScalarField::zero(spec.grid),
                        ScalarField::zero(spec.grid), ScalarField::zero(spec.grid)};
  out.H_y.values = ww.dy.values + ss.dy.values.cwiseProduct(u.values) -
                   p.values.cwiseProduct(dd.dy.values);
  out.H_u.values = ss.v.values + spec.beta.values.cwiseProduct(p.values);
  out.H_yy.values = ww.dyy.values + ss.dyy.values.cwiseProduct(u.values) -
                    p.values.cwiseProduct(dd.dyy.values);
  out.H_yu = ss.dy;
  out.H_yp.values = -dd.dy.values;
  out.H_up = spec.beta;
  return out;
}

namespace {

double s0_profile(const PresetParams& p, double x1) {
  return p.s0_scale * (x1 - 0.5) + p.s0_offset;
}

double target(const PresetParams& p, double x1, double x2) {
  return p.yd_amplitude * std::sin(std::numbers::pi * x1) *
         std::sin(std::numbers::pi * x2);
}

CoefficientFn tracking_cost(const PresetParams& p) {
  return [p](double x1, double x2, double y) {
    const double m = y - target(p, x1, x2);
    return Deriv2{0.5 * m * m, m, 1.0};
  };
}

}  // namespace

ProblemSpec make_problem(const std::string& preset, const GridSpec& grid,
                         const PresetParams& params) {
  if (!(params.lower <= params.upper)) {
    throw std::invalid_argument("make_problem: requires lower <= upper");
  }
  ProblemSpec spec{
      grid,
      EllipticOperator::assemble(grid, ScalarField::constant(grid, params.a_value),
                                 ScalarField::constant(grid, params.b_value)),
      ScalarField::constant(grid, params.beta_value),
      ScalarField::constant(grid, params.lower),
      ScalarField::constant(grid, params.upper),
      nullptr,
      nullptr,
      nullptr,
      preset,
      params};

  const PresetParams p = params;
  if (preset == "linear-tracking") {
    spec.d = [](double, double, double) { return Deriv2{0.0, 0.0, 0.0}; };
    spec.w = tracking_cost(p);
    spec.s = [p](double x1, double, double) {
      return Deriv2{s0_profile(p, x1), 0.0, 0.0};
    };
  } else if (preset == "cubic-monotone") {
    spec.d = [](double, double, double y) {
      return Deriv2{y * y * y + y, 3.0 * y * y + 1.0, 6.0 * y};
    };
    spec.w = tracking_cost(p);
    spec.s = [p](double x1, double, double) {
      return Deriv2{s0_profile(p, x1), 0.0, 0.0};
    };
  } else if (preset == "bilinear-cost") {
    spec.d = [](double, double, double y) { return Deriv2{y, 1.0, 0.0}; };
    spec.w = tracking_cost(p);
    spec.s = [p](double x1, double, double y) {
      const double s0 = s0_profile(p, x1);
      return Deriv2{s0 * (1.0 + y * y), 2.0 * s0 * y, 2.0 * s0};
    };
  } else {
    throw std::invalid_argument("unknown problem preset: " + preset);
  }
  return spec;
}

std::vector<std::string> problem_presets() {
  return {"linear-tracking", "cubic-monotone", "bilinear-cost"};
}

}  // namespace bbopt
