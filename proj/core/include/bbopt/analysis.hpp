#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "bbopt/solvers.hpp"

namespace bbopt {

/// A fitted log–log regression over a sweep: ys ≈ constant · xs^exponent.
struct RateReport {
  std::vector<double> xs;
  std::vector<double> ys;
  double exponent = 0.0;   ///< fitted slope
  double constant = 0.0;   ///< fitted multiplicative constant
  double r_squared = 0.0;
};

/// Least-squares fit of log ys against log xs. Requires at least 4 strictly
/// positive samples with strictly monotone xs; throws InsufficientDataError
/// otherwise.
RateReport fit_rate(std::span<const double> xs, std::span<const double> ys);

/// Quadratic form Λ(v) = ∫ [H_yy z_v² + 2 H_uy z_v v] dx, evaluated by
/// computing z_v and integrating the quadrature of the integrand.
double lambda_direct(const ProblemSpec& spec, const OptimalitySnapshot& at,
                     const ScalarField& v);

/// The dual route Λ(v) = ∫ π_v v dx. Must agree with lambda_direct to
/// rounding: the identity is exact at the discrete level by operator symmetry.
double lambda_dual(const ProblemSpec& spec, const OptimalitySnapshot& at,
                   const ScalarField& v);

/// Bilinear form Γ(v1, v2) = ½ ∫ [π_{v1} v2 + π_{v2} v1] dx; symmetric, and
/// Γ(v, v) = Λ(v).
double gamma_form(const ProblemSpec& spec, const OptimalitySnapshot& at,
                  const ScalarField& v1, const ScalarField& v2);

/// Support split of a direction by the switching band: v1 lives on
/// {|σ| ≤ τ}, v2 on the complement, v1 + v2 = v exactly.
struct ConeSplit {
  ScalarField v1;
  ScalarField v2;
  double tau = 0.0;
};

ConeSplit cone_split(const OptimalitySnapshot& at, const ScalarField& v, double tau);

/// Regression of log meas{|σ| ≤ ε} against log ε over the given ε sweep.
/// The exponent estimates 1/k*, the constant estimates μ₀. Samples with zero
/// measure are dropped; fewer than 4 survivors raise InsufficientDataError.
RateReport estimate_structural_exponent(const ScalarField& sigma,
                                        std::span<const double> eps_grid);

/// Default ε sweep for the structural estimator: 8 log-spaced values from the
/// resolution floor 5·max(hx,hy)·max|∇σ| up to 0.8·max|σ|, pulled down when
/// the floor would exceed the cap.
std::vector<double> default_eps_grid(const ScalarField& sigma);

struct CoercivityReport {
  enum class Verdict { Coercive, NotCoercive, VacuouslyCoercive };

  double min_ratio_linear = 0.0;     ///< min ∫σv / |v|₁^{k*+1}
  double min_ratio_quadratic = 0.0;  ///< min Λ(v) / |v|₁^{k*+1}
  double margin = 0.0;               ///< min_ratio_linear + min_ratio_quadratic
  Verdict verdict = Verdict::NotCoercive;
  int kstar = 1;
  double fitted_exponent = 0.0;
  bool out_of_theory = false;  ///< k* outside [1, 2) for n = 2
  int band_nodes = 0;
};

/// Sampled probe of the split coercivity condition over random admissible
/// directions in the extended cone: at each band node the admissible extreme
/// displacement times an independent uniform factor. Sampling gives
/// necessary evidence, not a certificate. k* is estimated from σ and rounded
/// to the nearest of {1, 2, 3}.
CoercivityReport coercivity_probe(const ProblemSpec& spec, const OptimalitySnapshot& at,
                                  double tau, int n_samples, std::uint64_t seed = 0);

}  // namespace bbopt
