#include "bbopt/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "bbopt/rng.hpp"

namespace bbopt {

RateReport fit_rate(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) {
    throw std::invalid_argument("fit_rate: xs and ys must pair up");
  }
  if (xs.size() < 4) {
    throw InsufficientDataError("fit_rate: need at least 4 samples");
  }
  bool increasing = true, decreasing = true;
  for (std::size_t k = 0; k + 1 < xs.size(); ++k) {
    increasing = increasing && xs[k] < xs[k + 1];
    decreasing = decreasing && xs[k] > xs[k + 1];
  }
  if (!increasing && !decreasing) {
    throw std::invalid_argument("fit_rate: xs must be strictly monotone");
  }
  for (std::size_t k = 0; k < xs.size(); ++k) {
    if (!(xs[k] > 0.0) || !(ys[k] > 0.0)) {
      throw std::invalid_argument("fit_rate: samples must be positive");
    }
  }

  const auto n = static_cast<double>(xs.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    const double lx = std::log(xs[k]);
    const double ly = std::log(ys[k]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    syy += ly * ly;
  }
  const double denom = n * sxx - sx * sx;
  const double slope = (n * sxy - sx * sy) / denom;
  const double intercept = (sy - slope * sx) / n;

  double ss_res = 0, ss_tot = 0;
  const double mean_y = sy / n;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    const double ly = std::log(ys[k]);
    const double fit = intercept + slope * std::log(xs[k]);
    ss_res += (ly - fit) * (ly - fit);
    ss_tot += (ly - mean_y) * (ly - mean_y);
  }

  RateReport out;
  out.xs.assign(xs.begin(), xs.end());
  out.ys.assign(ys.begin(), ys.end());
  out.exponent = slope;
  out.constant = std::exp(intercept);
  out.r_squared = ss_tot > 0 ? 1.0 - ss_res / ss_tot : 1.0;
  if (!std::isfinite(out.exponent)) {
    throw NumericalError("fit_rate: exponent is not finite", 0.0);
  }
  return out;
}

double lambda_direct(const ProblemSpec& spec, const OptimalitySnapshot& at,
                     const ScalarField& v) {
  const ScalarField z = solve_linearized_state(spec, at, v);
  const auto h = hamiltonian_derivatives(spec, at.y, at.p, at.u.field());
  ScalarField integrand = ScalarField::zero(spec.grid);
  integrand.values = h.H_yy.values.cwiseProduct(z.values.cwiseProduct(z.values)) +
                     2.0 * h.H_yu.values.cwiseProduct(z.values.cwiseProduct(v.values));
  return inner_product(integrand, ScalarField::constant(spec.grid, 1.0));
}

double lambda_dual(const ProblemSpec& spec, const OptimalitySnapshot& at,
                   const ScalarField& v) {
  return inner_product(pi_of(spec, at, v), v);
}

double gamma_form(const ProblemSpec& spec, const OptimalitySnapshot& at,
                  const ScalarField& v1, const ScalarField& v2) {
  require_same_grid(v1, v2);
  return 0.5 * (inner_product(pi_of(spec, at, v1), v2) +
                inner_product(pi_of(spec, at, v2), v1));
}

ConeSplit cone_split(const OptimalitySnapshot& at, const ScalarField& v, double tau) {
  if (!(tau > 0.0)) {
    throw std::invalid_argument("cone_split: tau must be positive");
  }
  require_same_grid(at.sigma, v);
  ConeSplit out{ScalarField::zero(v.grid), ScalarField::zero(v.grid), tau};
  for (int k = 0; k < v.values.size(); ++k) {
    if (std::abs(at.sigma.values[k]) <= tau) {
      out.v1.values[k] = v.values[k];
    } else {
      out.v2.values[k] = v.values[k];
    }
  }
  return out;
}

RateReport estimate_structural_exponent(const ScalarField& sigma,
                                        std::span<const double> eps_grid) {
  std::vector<double> xs, ys;
  for (double eps : eps_grid) {
    if (!(eps > 0.0)) {
      throw std::invalid_argument("estimate_structural_exponent: eps values must be positive");
    }
    const double m = measure_level_set(sigma, eps);
    if (m > 0.0) {
      xs.push_back(eps);
      ys.push_back(m);
    }
  }
  if (xs.size() < 4) {
    throw InsufficientDataError(
        "estimate_structural_exponent: fewer than 4 eps samples with nonzero measure");
  }
  return fit_rate(xs, ys);
}

std::vector<double> default_eps_grid(const ScalarField& sigma) {
  const GridSpec& g = sigma.grid;
  double grad_max = 0.0;
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      if (i + 1 < g.nx) {
        grad_max = std::max(grad_max, std::abs(sigma(i + 1, j) - sigma(i, j)) / g.hx);
      }
      if (j + 1 < g.ny) {
        grad_max = std::max(grad_max, std::abs(sigma(i, j + 1) - sigma(i, j)) / g.hy);
      }
    }
  }
  const double sig_max = norm(sigma, Norm::Linf);
  const double cap = 0.8 * std::max(sig_max, 1e-300);
  double floor = 5.0 * std::max(g.hx, g.hy) * std::max(grad_max, 1e-300);
  // A band thinner than a cell cannot be resolved, but the sweep must also
  // stay below the saturation cap; prefer the cap when the two collide.
  if (floor >= cap) {
    floor = cap / 31.622776601683793;  // keep 1.5 decades
  }
  constexpr int kCount = 8;
  std::vector<double> eps(kCount);
  for (int k = 0; k < kCount; ++k) {
    const double t = static_cast<double>(k) / (kCount - 1);
    eps[k] = floor * std::pow(cap / floor, t);
  }
  return eps;
}

CoercivityReport coercivity_probe(const ProblemSpec& spec, const OptimalitySnapshot& at,
                                  double tau, int n_samples, std::uint64_t seed) {
  if (n_samples < 100) {
    throw std::invalid_argument("coercivity_probe: need n_samples >= 100");
  }
  if (!(tau > 0.0)) {
    throw std::invalid_argument("coercivity_probe: tau must be positive");
  }

  CoercivityReport rep;
  try {
    const auto eps = default_eps_grid(at.sigma);
    const RateReport fit = estimate_structural_exponent(at.sigma, eps);
    rep.fitted_exponent = fit.exponent;
    const double kstar_raw = 1.0 / std::max(fit.exponent, 1e-6);
    rep.kstar = static_cast<int>(std::clamp(std::lround(kstar_raw), 1l, 3l));
    rep.out_of_theory = rep.kstar >= 2;
  } catch (const InsufficientDataError&) {
    // σ bounded away from zero: the structural condition is vacuous.
    rep.kstar = 1;
    rep.fitted_exponent = std::numeric_limits<double>::quiet_NaN();
  }

  // Band nodes where the cone admits nonzero directions: |σ| ≤ τ and ū at a
  // bound (interior nodes are excluded by the cone definition).
  const GridSpec& g = spec.grid;
  const double bound_tol = 1e-10;
  std::vector<int> band;
  std::vector<double> extreme;  // admissible extreme displacement per band node
  for (int k = 0; k < g.num_nodes(); ++k) {
    if (std::abs(at.sigma.values[k]) > tau) continue;
    const double u = at.u.values()[k];
    const double lo = spec.lower.values[k];
    const double hi = spec.upper.values[k];
    if (u - lo <= bound_tol * (1.0 + std::abs(lo))) {
      band.push_back(k);
      extreme.push_back(hi - u);  // v >= 0 at the lower bound
    } else if (hi - u <= bound_tol * (1.0 + std::abs(hi))) {
      band.push_back(k);
      extreme.push_back(lo - u);  // v <= 0 at the upper bound
    }
  }
  rep.band_nodes = static_cast<int>(band.size());
  if (band.empty()) {
    rep.verdict = CoercivityReport::Verdict::VacuouslyCoercive;
    rep.min_ratio_linear = rep.min_ratio_quadratic = 0.0;
    rep.margin = 0.0;
    return rep;
  }

  Rng rng(seed);
  const double power = rep.kstar + 1.0;
  double min_lin = std::numeric_limits<double>::infinity();
  double min_quad = std::numeric_limits<double>::infinity();
  for (int s = 0; s < n_samples; ++s) {
    ScalarField v = ScalarField::zero(g);
    for (std::size_t b = 0; b < band.size(); ++b) {
      v.values[band[b]] = extreme[b] * rng.uniform();
    }
    const double l1 = norm(v, Norm::L1);
    if (l1 <= 0.0) continue;
    const double denom = std::pow(l1, power);
    min_lin = std::min(min_lin, inner_product(at.sigma, v) / denom);
    min_quad = std::min(min_quad, lambda_direct(spec, at, v) / denom);
  }
  rep.min_ratio_linear = min_lin;
  rep.min_ratio_quadratic = min_quad;
  rep.margin = min_lin + min_quad;
  rep.verdict = rep.margin > 0.0 ? CoercivityReport::Verdict::Coercive
                                 : CoercivityReport::Verdict::NotCoercive;
  return rep;
}

}  // namespace bbopt
