#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "bbopt/elliptic.hpp"
#include "bbopt/grid.hpp"

namespace bbopt {

/// Value and first two y-derivatives of a coefficient at one point.
struct Deriv2 {
  double v = 0.0;
  double dy = 0.0;
  double dyy = 0.0;
};

/// Pointwise coefficient evaluator (x1, x2, y) ↦ (value, ∂y, ∂yy).
/// Must be pure and thread-safe.
using CoefficientFn = std::function<Deriv2(double, double, double)>;

/// Tunable parameters of the built-in presets.
struct PresetParams {
  double a_value = 1.0;        ///< diffusion coefficient a(x) ≡ a_value
  double b_value = 1.0;        ///< Robin coefficient b(x) ≡ b_value
  double beta_value = 1.0;     ///< control gain β(x) ≡ beta_value
  double lower = -1.0;         ///< control bound b1
  double upper = 1.0;          ///< control bound b2
  double s0_scale = 2.0;       ///< scale of the switching profile s0(x)
  double s0_offset = 0.0;      ///< constant offset added to s0(x)
  double yd_amplitude = 0.5;   ///< amplitude of the tracking target y_d

  /// Reads any of {a_value, b_value, beta_value, lower, upper, s0_scale,
  /// s0_offset, yd_amplitude}; unknown keys are rejected.
  static PresetParams from_map(const std::map<std::string, double>& kv);
};

/// One control problem instance: the assembled elliptic operator, the control
/// gain and bounds, and the coefficient evaluators d, w, s with their
/// y-derivatives up to second order.
struct ProblemSpec {
  GridSpec grid;
  EllipticOperator op;
  ScalarField beta;
  ScalarField lower;  ///< b1, nodal
  ScalarField upper;  ///< b2, nodal
  CoefficientFn d;
  CoefficientFn w;
  CoefficientFn s;
  std::string preset;
  PresetParams params;

  /// Nodal samples of fn(x, y(x)) and its y-derivatives.
  struct CoeffFields {
    ScalarField v, dy, dyy;
  };
  CoeffFields eval(const CoefficientFn& fn, const ScalarField& y) const;
};

/// An element of the admissible set: lower ≤ u ≤ upper nodewise.
class ControlField {
 public:
  const ScalarField& field() const { return u_; }
  const Eigen::VectorXd& values() const { return u_.values; }

 private:
  explicit ControlField(ScalarField u) : u_(std::move(u)) {}
  ScalarField u_;
  friend ControlField project_admissible(const ScalarField&, const ProblemSpec&);
};

/// Pointwise clamp onto [b1, b2]; idempotent and 1-Lipschitz in Linf.
ControlField project_admissible(const ScalarField& v, const ProblemSpec& spec);

/// Nodal samples of the Hamiltonian derivatives at (y, p, u):
///   H(x,y,p,u) = w + s·u + p·(β·u − d).
struct HamiltonianDerivs {
  ScalarField H_y;   ///< w_y + s_y·u − p·d_y
  ScalarField H_u;   ///< s + β·p
  ScalarField H_yy;  ///< w_yy + s_yy·u − p·d_yy
  ScalarField H_yu;  ///< s_y
  ScalarField H_yp;  ///< −d_y
  ScalarField H_up;  ///< β
};

HamiltonianDerivs hamiltonian_derivatives(const ProblemSpec& spec, const ScalarField& y,
                                          const ScalarField& p, const ScalarField& u);

/// Built-in presets:
///   "linear-tracking":  d = 0,        w = (y−y_d)²/2, s = s0(x)
///   "cubic-monotone":   d = y³ + y,   w = (y−y_d)²/2, s = s0(x)
///   "bilinear-cost":    d = y,        w = (y−y_d)²/2, s = s0(x)·(1 + y²)
/// with s0(x) = s0_scale·(x1 − 1/2) + s0_offset and
/// y_d(x) = yd_amplitude·sin(πx1)·sin(πx2).
ProblemSpec make_problem(const std::string& preset, const GridSpec& grid,
                         const PresetParams& params = {});

std::vector<std::string> problem_presets();

}  // namespace bbopt
