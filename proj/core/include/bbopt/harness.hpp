#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "bbopt/analysis.hpp"
#include "bbopt/optimize.hpp"

namespace bbopt {

/// One experiment description, parsed from a flat key = value config file
/// (see README for the schema) plus command-line overrides.
struct ExperimentConfig {
  std::string preset = "linear-tracking";
  std::map<std::string, double> preset_params;
  std::vector<int> grids = {33};
  std::string experiment;
  std::vector<double> sweep;
  double gap_tol = 1e-10;
  double tie_tol = 1e-12;
  std::uint64_t seed = 1;
  std::string out_dir = ".";
  double tau = 0.0;              ///< 0 → default 0.1·‖σ‖∞
  std::string zeta_preset = "tikhonov";
  std::map<std::string, double> zeta_params;  ///< bump_center_x/bump_center_y/bump_width
  bool rho_include_xi_eta = false;
  int kstar_override = 0;        ///< 0 → estimate from σ̄
  int m_max = 20;
  int dc_samples = 33;
  int n_probe = 200;
  std::string manufactured = "quartic";  ///< convergence study solution

  static ExperimentConfig from_file(const std::string& path);
  void apply_override(const std::string& key, const std::string& value);
  void validate() const;
};

/// One sweep point of a subregularity experiment.
struct SubregularityRecord {
  double magnitude = 0.0;   ///< sweep parameter (ε, t, …)
  double zeta_size = 0.0;   ///< d_Z or d_Υ value
  double u_dist_l1 = 0.0;
  double y_dist_l2 = 0.0;
  double p_dist_l2 = 0.0;
  double implied_kappa = 0.0;
  int iters = 0;
  double gap = 0.0;

  double psi_distance() const { return u_dist_l1 + y_dist_l2 + p_dist_l2; }
};

struct ExperimentReport {
  std::string name;
  bool pass = true;
  bool vacuous = false;            ///< distances at the solver floor everywhere
  std::vector<std::string> lines;  ///< human-readable summary
  RateReport rate;                 ///< valid when rate_valid
  bool rate_valid = false;
  std::vector<SubregularityRecord> records;
  std::string csv_path;
  int kstar = 1;
};

/// Distances below this floor are unresolvable against the cached reference
/// and are excluded from rate fits and κ ratios.
inline constexpr double kDistFloor = 1e-9;

/// Reference solution ū: solve_bangbang at gap_tol 1e-12, cached on disk
/// under the output directory and keyed by preset, grid and parameters.
OptimalitySnapshot reference_solution(const ExperimentConfig& cfg, const ProblemSpec& spec);

ExperimentReport run_tikhonov_sweep(const ExperimentConfig& cfg);
ExperimentReport run_rho_sweep(const ExperimentConfig& cfg);
ExperimentReport run_zeta_sweep(const ExperimentConfig& cfg);
ExperimentReport run_diagnostics(const ExperimentConfig& cfg);
ExperimentReport run_convergence(const ExperimentConfig& cfg);

/// Recompute a sweep verdict from emitted records: exponent fit over the
/// resolved points and, when require_kappa_bound, the ≤10× κ-ratio rule.
struct SweepVerdict {
  bool pass = true;
  bool vacuous = false;
  double fitted_exponent = 0.0;
  double kappa_ratio = 0.0;
  bool rate_valid = false;
};
SweepVerdict evaluate_sweep(const std::vector<SubregularityRecord>& records, int kstar,
                            bool require_kappa_bound);

/// Rows of an emitted sweep CSV (comment lines skipped).
std::vector<SubregularityRecord> read_sweep_csv(const std::string& path);

}  // namespace bbopt
