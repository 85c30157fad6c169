#include "bbopt/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>

#include "bbopt/rng.hpp"

namespace bbopt {

namespace {

const std::vector<std::string> kPresetParamKeys = {
    "a_value", "b_value", "beta_value", "lower",
    "upper",   "s0_scale", "s0_offset", "yd_amplitude"};
const std::vector<std::string> kZetaParamKeys = {"bump_center_x", "bump_center_y",
                                                 "bump_width"};

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

bool is_rate_experiment(const std::string& name) {
  return name == "tikhonov-sweep" || name == "rho-sweep" || name == "zeta-sweep";
}

std::uint64_t fnv1a(std::uint64_t h, const void* data, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t k = 0; k < n; ++k) {
    h ^= p[k];
    h *= 1099511628211ull;
  }
  return h;
}

int resolve_kstar(const ExperimentConfig& cfg, const ScalarField& sigma,
                  std::vector<std::string>* lines) {
  if (cfg.kstar_override != 0) {
    if (lines != nullptr) {
      lines->push_back("kstar = " + std::to_string(cfg.kstar_override) + " (override)");
    }
    return cfg.kstar_override;
  }
  try {
    const RateReport fit = estimate_structural_exponent(sigma, default_eps_grid(sigma));
    const int k = static_cast<int>(
        std::clamp(std::lround(1.0 / std::max(fit.exponent, 1e-6)), 1l, 3l));
    if (lines != nullptr) {
      lines->push_back("structural exponent fit = " + g17(fit.exponent) +
                       " (r2 = " + g17(fit.r_squared) + "), kstar = " + std::to_string(k));
      if (k >= 2) {
        lines->push_back("note: kstar >= 2 is outside the n = 2 theory range [1, 2)");
      }
    }
    return k;
  } catch (const InsufficientDataError&) {
    if (lines != nullptr) {
      lines->push_back("sigma bounded away from 0: structural condition vacuous, kstar = 1");
    }
    return 1;
  }
}

void write_sweep_csv(const std::string& path, const ExperimentConfig& cfg, int grid_n,
                     int kstar, const std::vector<SubregularityRecord>& records) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open CSV for writing: " + path);
  out << "# experiment = " << cfg.experiment << "\n";
  out << "# preset = " << cfg.preset << "\n";
  out << "# grid = " << grid_n << "\n";
  out << "# seed = " << cfg.seed << "\n";
  out << "# kstar = " << kstar << "\n";
  out << "# gap_tol = " << g17(cfg.gap_tol) << "\n";
  out << "magnitude,d_Z_or_d_Upsilon,u_dist_L1,y_dist_L2,p_dist_L2,implied_kappa,iters,gap\n";
  for (const auto& r : records) {
    out << g17(r.magnitude) << ',' << g17(r.zeta_size) << ',' << g17(r.u_dist_l1) << ','
        << g17(r.y_dist_l2) << ',' << g17(r.p_dist_l2) << ',' << g17(r.implied_kappa)
        << ',' << r.iters << ',' << g17(r.gap) << "\n";
  }
}

SubregularityRecord make_record(double magnitude, double zeta_size,
                                const OptimalitySnapshot& snap,
                                const OptimalitySnapshot& ref, int kstar,
                                const SolveStats& stats) {
  SubregularityRecord r;
  r.magnitude = magnitude;
  r.zeta_size = zeta_size;
  ScalarField du = snap.u.field();
  du.values -= ref.u.values();
  ScalarField dy = snap.y;
  dy.values -= ref.y.values;
  ScalarField dp = snap.p;
  dp.values -= ref.p.values;
  r.u_dist_l1 = norm(du, Norm::L1);
  r.y_dist_l2 = norm(dy, Norm::L2);
  r.p_dist_l2 = norm(dp, Norm::L2);
  r.implied_kappa =
      zeta_size > 0.0 ? r.psi_distance() / std::pow(zeta_size, 1.0 / kstar) : 0.0;
  r.iters = stats.iters;
  r.gap = stats.final_gap;
  return r;
}

std::vector<double> sorted_descending_sweep(const ExperimentConfig& cfg) {
  std::vector<double> sweep = cfg.sweep;
  std::sort(sweep.begin(), sweep.end(), std::greater<>());
  sweep.erase(std::unique(sweep.begin(), sweep.end()), sweep.end());
  if (is_rate_experiment(cfg.experiment) && sweep.size() < 4) {
    throw InsufficientDataError("rate experiments need at least 4 distinct sweep values");
  }
  return sweep;
}

SolveOptions solver_options(const ExperimentConfig& cfg) {
  SolveOptions opts;
  opts.gap_tol = cfg.gap_tol;
  opts.tie_tol = cfg.tie_tol;
  opts.seed = cfg.seed;
  return opts;
}

void finalize_sweep_report(ExperimentReport& rep, const ExperimentConfig& cfg,
                           int grid_n, int kstar, bool require_kappa) {
  const SweepVerdict v = evaluate_sweep(rep.records, kstar, require_kappa);
  rep.pass = v.pass;
  rep.vacuous = v.vacuous;
  rep.kstar = kstar;
  if (v.rate_valid) {
    std::vector<double> xs, ys;
    for (const auto& r : rep.records) {
      if (r.u_dist_l1 > kDistFloor) {
        xs.push_back(require_kappa ? r.zeta_size : r.magnitude);
        ys.push_back(require_kappa ? r.psi_distance() : r.u_dist_l1);
      }
    }
    rep.rate = fit_rate(xs, ys);
    rep.rate_valid = true;
    rep.lines.push_back("fitted exponent = " + g17(v.fitted_exponent) +
                        " (threshold " + g17(1.0 / kstar - 0.2) + ")");
    if (require_kappa) {
      rep.lines.push_back("implied kappa ratio = " + g17(v.kappa_ratio) +
                          " (threshold 10)");
    }
  } else {
    rep.lines.push_back("vacuous rate: distances at the solver floor, fit skipped");
  }
  rep.lines.push_back(rep.pass ? "PASS" : "FAIL");
  rep.csv_path = cfg.out_dir + "/" + cfg.experiment + ".csv";
  write_sweep_csv(rep.csv_path, cfg, grid_n, kstar, rep.records);
}

}  // namespace

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  ExperimentConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument(path + ":" + std::to_string(lineno) +
                                  ": expected key = value");
    }
    cfg.apply_override(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return cfg;
}

void ExperimentConfig::apply_override(const std::string& key, const std::string& value) {
  auto as_double = [&value, &key]() {
    try {
      std::size_t pos = 0;
      const double v = std::stod(value, &pos);
      if (pos != value.size()) throw std::invalid_argument(value);
      return v;
    } catch (const std::exception&) {
      throw std::invalid_argument("bad numeric value for " + key + ": " + value);
    }
  };
  if (key == "preset") {
    preset = value;
  } else if (key == "experiment") {
    experiment = value;
  } else if (key == "out") {
    out_dir = value;
  } else if (key == "zeta_preset") {
    zeta_preset = value;
  } else if (key == "manufactured") {
    manufactured = value;
  } else if (key == "grids" || key == "grid") {
    grids.clear();
    for (const auto& item : split_list(value)) {
      grids.push_back(std::stoi(item));
    }
  } else if (key == "sweep") {
    sweep.clear();
    for (const auto& item : split_list(value)) {
      sweep.push_back(std::stod(item));
    }
  } else if (key == "gap_tol") {
    gap_tol = as_double();
  } else if (key == "tie_tol") {
    tie_tol = as_double();
  } else if (key == "seed") {
    seed = static_cast<std::uint64_t>(std::stoull(value));
  } else if (key == "tau") {
    tau = as_double();
  } else if (key == "kstar") {
    kstar_override = std::stoi(value);
  } else if (key == "m_max") {
    m_max = std::stoi(value);
  } else if (key == "dc_samples") {
    dc_samples = std::stoi(value);
  } else if (key == "n_probe") {
    n_probe = std::stoi(value);
  } else if (key == "rho_include_xi_eta") {
    rho_include_xi_eta = value == "1" || value == "true";
  } else if (std::find(kPresetParamKeys.begin(), kPresetParamKeys.end(), key) !=
             kPresetParamKeys.end()) {
    preset_params[key] = as_double();
  } else if (std::find(kZetaParamKeys.begin(), kZetaParamKeys.end(), key) !=
             kZetaParamKeys.end()) {
    zeta_params[key] = as_double();
  } else {
    throw std::invalid_argument("unknown config key: " + key);
  }
}

void ExperimentConfig::validate() const {
  if (grids.empty()) throw std::invalid_argument("config: no grid sizes");
  for (std::size_t k = 0; k < grids.size(); ++k) {
    if (grids[k] < 3) throw std::invalid_argument("config: grid sizes must be >= 3");
    if (k > 0 && grids[k] <= grids[k - 1]) {
      throw std::invalid_argument("config: grid sizes must be ascending");
    }
  }
  for (double v : sweep) {
    if (!(v > 0.0)) throw std::invalid_argument("config: sweep values must be positive");
  }
  if (is_rate_experiment(experiment) && sweep.size() < 4) {
    throw InsufficientDataError("config: rate experiments need >= 4 sweep values");
  }
  if (experiment == "convergence" && grids.size() < 3) {
    throw InsufficientDataError("config: convergence needs >= 3 grid sizes");
  }
  if (!(gap_tol > 0.0)) throw std::invalid_argument("config: gap_tol must be positive");
}

OptimalitySnapshot reference_solution(const ExperimentConfig& cfg, const ProblemSpec& spec) {
  std::uint64_t h = 1469598103934665603ull;
  h = fnv1a(h, cfg.preset.data(), cfg.preset.size());
  const std::int32_t dims[2] = {spec.grid.nx, spec.grid.ny};
  h = fnv1a(h, dims, sizeof(dims));
  const PresetParams& p = spec.params;
  const double fields[8] = {p.a_value, p.b_value,   p.beta_value, p.lower,
                            p.upper,   p.s0_scale,  p.s0_offset,  p.yd_amplitude};
  h = fnv1a(h, fields, sizeof(fields));

  char name[128];
  std::snprintf(name, sizeof(name), "ref-%s-%dx%d-%016llx.bbsnap", cfg.preset.c_str(),
                spec.grid.nx, spec.grid.ny, static_cast<unsigned long long>(h));
  const std::string path = cfg.out_dir + "/" + name;
  if (std::filesystem::exists(path)) {
    return load_snapshot(path, spec);
  }
  SolveOptions opts = solver_options(cfg);
  opts.gap_tol = 1e-12;
  opts.max_iters = 5000;
  OptimalitySnapshot ref = solve_bangbang(spec, opts);
  std::filesystem::create_directories(cfg.out_dir);
  save_snapshot(path, ref);
  return ref;
}

SweepVerdict evaluate_sweep(const std::vector<SubregularityRecord>& records, int kstar,
                            bool require_kappa_bound) {
  SweepVerdict v;
  std::vector<double> xs, ys, kappas;
  for (const auto& r : records) {
    if (r.u_dist_l1 <= kDistFloor) continue;
    xs.push_back(require_kappa_bound ? r.zeta_size : r.magnitude);
    ys.push_back(require_kappa_bound ? r.psi_distance() : r.u_dist_l1);
    kappas.push_back(r.implied_kappa);
  }
  if (xs.size() < 4) {
    v.vacuous = true;
    v.pass = true;
    return v;
  }
  const RateReport fit = fit_rate(xs, ys);
  v.rate_valid = true;
  v.fitted_exponent = fit.exponent;
  v.pass = fit.exponent >= 1.0 / kstar - 0.2;
  if (require_kappa_bound) {
    const auto [lo, hi] = std::minmax_element(kappas.begin(), kappas.end());
    v.kappa_ratio = *lo > 0.0 ? *hi / *lo : std::numeric_limits<double>::infinity();
    v.pass = v.pass && v.kappa_ratio <= 10.0;
  }
  return v;
}

std::vector<SubregularityRecord> read_sweep_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open CSV: " + path);
  std::vector<SubregularityRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty() || line[0] == '#' || line.rfind("magnitude", 0) == 0) continue;
    const auto cells = split_list(line);
    if (cells.size() != 8) throw std::runtime_error("malformed CSV row: " + line);
    SubregularityRecord r;
    r.magnitude = std::stod(cells[0]);
    r.zeta_size = std::stod(cells[1]);
    r.u_dist_l1 = std::stod(cells[2]);
    r.y_dist_l2 = std::stod(cells[3]);
    r.p_dist_l2 = std::stod(cells[4]);
    r.implied_kappa = std::stod(cells[5]);
    r.iters = std::stoi(cells[6]);
    r.gap = std::stod(cells[7]);
    out.push_back(r);
  }
  return out;
}

ExperimentReport run_tikhonov_sweep(const ExperimentConfig& cfg) {
  ExperimentConfig local = cfg;
  local.experiment = "tikhonov-sweep";
  local.validate();
  std::filesystem::create_directories(local.out_dir);

  const GridSpec grid = GridSpec::unit_square(local.grids.back(), local.grids.back());
  const ProblemSpec spec =
      make_problem(local.preset, grid, PresetParams::from_map(local.preset_params));
  ExperimentReport rep;
  rep.name = "tikhonov-sweep";

  const OptimalitySnapshot ref = reference_solution(local, spec);
  const int kstar = resolve_kstar(local, ref.sigma, &rep.lines);

  const SolveOptions opts = solver_options(local);
  const NonlinearPerturbation zero = zero_perturbation();
  std::optional<ControlField> warm;
  for (double eps : sorted_descending_sweep(local)) {
    SolveStats stats;
    const OptimalitySnapshot snap =
        solve_tikhonov(spec, eps, opts, warm ? &*warm : nullptr, &stats);
    const DcValue dz =
        d_upsilon(make_perturbation("tikhonov", eps), zero, local.m_max, local.dc_samples);
    rep.records.push_back(make_record(eps, dz.value, snap, ref, kstar, stats));
    warm = snap.u;
  }
  finalize_sweep_report(rep, local, grid.nx, kstar, /*require_kappa=*/false);
  return rep;
}

ExperimentReport run_rho_sweep(const ExperimentConfig& cfg) {
  ExperimentConfig local = cfg;
  local.experiment = "rho-sweep";
  local.validate();
  std::filesystem::create_directories(local.out_dir);

  const GridSpec grid = GridSpec::unit_square(local.grids.back(), local.grids.back());
  const ProblemSpec spec =
      make_problem(local.preset, grid, PresetParams::from_map(local.preset_params));
  ExperimentReport rep;
  rep.name = "rho-sweep";

  const OptimalitySnapshot ref = reference_solution(local, spec);
  const int kstar = resolve_kstar(local, ref.sigma, &rep.lines);

  // One fixed random shape per sweep, scaled by the magnitude.
  Rng rng(local.seed);
  ScalarField shape_rho = ScalarField::zero(grid);
  for (int k = 0; k < grid.num_nodes(); ++k) shape_rho.values[k] = rng.uniform(-1.0, 1.0);
  shape_rho.values /= norm(shape_rho, Norm::Linf);
  ScalarField shape_xi = ScalarField::zero(grid);
  ScalarField shape_eta = ScalarField::zero(grid);
  if (local.rho_include_xi_eta) {
    for (int k = 0; k < grid.num_nodes(); ++k) shape_xi.values[k] = rng.uniform(-1.0, 1.0);
    for (int k = 0; k < grid.num_nodes(); ++k) shape_eta.values[k] = rng.uniform(-1.0, 1.0);
    shape_xi.values /= norm(shape_xi, Norm::L2);
    shape_eta.values /= norm(shape_eta, Norm::L2);
  }

  const SolveOptions opts = solver_options(local);
  std::optional<ControlField> warm;
  for (double t : sorted_descending_sweep(local)) {
    PerturbationTriple pert = PerturbationTriple::zero(grid);
    pert.rho.values = t * shape_rho.values;
    double zeta_size = t;
    if (local.rho_include_xi_eta) {
      pert.xi.values = t * shape_xi.values;
      pert.eta.values = t * shape_eta.values;
      zeta_size = norm(pert.xi, Norm::L2) + norm(pert.eta, Norm::L2) + t;
    }
    SolveStats stats;
    const OptimalitySnapshot snap =
        solve_bangbang(spec, opts, &pert, warm ? &*warm : nullptr, &stats);
    rep.records.push_back(make_record(t, zeta_size, snap, ref, kstar, stats));
    warm = snap.u;
  }
  finalize_sweep_report(rep, local, grid.nx, kstar, /*require_kappa=*/true);
  return rep;
}

ExperimentReport run_zeta_sweep(const ExperimentConfig& cfg) {
  ExperimentConfig local = cfg;
  local.experiment = "zeta-sweep";
  local.validate();
  std::filesystem::create_directories(local.out_dir);

  const GridSpec grid = GridSpec::unit_square(local.grids.back(), local.grids.back());
  const ProblemSpec spec =
      make_problem(local.preset, grid, PresetParams::from_map(local.preset_params));
  ExperimentReport rep;
  rep.name = "zeta-sweep";

  const OptimalitySnapshot ref = reference_solution(local, spec);
  const int kstar = resolve_kstar(local, ref.sigma, &rep.lines);

  const SolveOptions opts = solver_options(local);
  const NonlinearPerturbation zero = zero_perturbation();
  std::optional<ControlField> warm;
  for (double c : sorted_descending_sweep(local)) {
    const NonlinearPerturbation zeta =
        make_perturbation(local.zeta_preset, c, local.zeta_params);
    const DcValue dz = d_upsilon(zeta, zero, local.m_max, local.dc_samples);
    SolveStats stats;
    const OptimalitySnapshot snap =
        solve_nonlinear_perturbed(spec, zeta, opts, warm ? &*warm : nullptr, &stats);
    rep.records.push_back(make_record(c, dz.value, snap, ref, kstar, stats));
    warm = snap.u;
  }
  finalize_sweep_report(rep, local, grid.nx, kstar, /*require_kappa=*/true);
  return rep;
}

ExperimentReport run_diagnostics(const ExperimentConfig& cfg) {
  ExperimentConfig local = cfg;
  local.experiment = "diagnostics";
  local.validate();
  std::filesystem::create_directories(local.out_dir);

  const GridSpec grid = GridSpec::unit_square(local.grids.back(), local.grids.back());
  const ProblemSpec spec =
      make_problem(local.preset, grid, PresetParams::from_map(local.preset_params));
  ExperimentReport rep;
  rep.name = "diagnostics";

  const SolveOptions opts = solver_options(local);
  SolveStats stats;
  const OptimalitySnapshot snap = solve_bangbang(spec, opts, nullptr, nullptr, &stats);

  std::vector<std::pair<std::string, double>> kv;
  kv.emplace_back("iters", stats.iters);
  kv.emplace_back("final_gap", stats.final_gap);
  kv.emplace_back("state_residual", snap.state_residual);
  kv.emplace_back("adjoint_residual", snap.adjoint_residual);

  const int kstar = resolve_kstar(local, snap.sigma, &rep.lines);
  rep.kstar = kstar;
  kv.emplace_back("kstar", kstar);

  bool vacuous_sigma = false;
  try {
    const RateReport fit =
        estimate_structural_exponent(snap.sigma, default_eps_grid(snap.sigma));
    kv.emplace_back("structural_exponent", fit.exponent);
    kv.emplace_back("structural_constant", fit.constant);
    kv.emplace_back("structural_r2", fit.r_squared);
  } catch (const InsufficientDataError&) {
    vacuous_sigma = true;
    rep.lines.push_back("Assumption-3 check vacuous: no level set mass near sigma = 0");
  }

  const double sigma_inf = norm(snap.sigma, Norm::Linf);
  const double tau = local.tau > 0.0 ? local.tau : 0.1 * sigma_inf;
  kv.emplace_back("tau", tau);
  const CoercivityReport probe =
      coercivity_probe(spec, snap, tau, local.n_probe, local.seed);
  kv.emplace_back("min_ratio_linear", probe.min_ratio_linear);
  kv.emplace_back("min_ratio_quadratic", probe.min_ratio_quadratic);
  kv.emplace_back("coercivity_margin", probe.margin);
  kv.emplace_back("band_nodes", probe.band_nodes);
  const char* verdict =
      probe.verdict == CoercivityReport::Verdict::Coercive          ? "coercive"
      : probe.verdict == CoercivityReport::Verdict::VacuouslyCoercive ? "vacuously coercive"
                                                                      : "not coercive";
  rep.lines.push_back(std::string("coercivity verdict: ") + verdict);

  // Bang-bang certificate: nodes off the bounds where sigma is active.
  double bad_measure = 0.0;
  double pontryagin_min = 0.0;
  for (int j = 0; j < grid.ny; ++j) {
    for (int i = 0; i < grid.nx; ++i) {
      const double u = snap.u.field()(i, j);
      const double lo = spec.lower(i, j);
      const double hi = spec.upper(i, j);
      const double s = snap.sigma(i, j);
      const double btol = 1e-9 * (1.0 + std::max(std::abs(lo), std::abs(hi)));
      if (u - lo > btol && hi - u > btol && std::abs(s) > 1e-6) {
        bad_measure += grid.quad_weight(i, j);
      }
      pontryagin_min = std::min({pontryagin_min, s * (lo - u), s * (hi - u)});
    }
  }
  kv.emplace_back("bangbang_bad_measure", bad_measure);
  kv.emplace_back("pontryagin_min", pontryagin_min);

  // Embedded Λ identity check on a random direction.
  Rng rng(local.seed);
  ScalarField v = ScalarField::zero(grid);
  for (int k = 0; k < grid.num_nodes(); ++k) v.values[k] = rng.uniform(-1.0, 1.0);
  const double ld = lambda_direct(spec, snap, v);
  const double lu = lambda_dual(spec, snap, v);
  const double lambda_rel =
      std::abs(ld - lu) / std::max({std::abs(ld), std::abs(lu), 1e-300});
  kv.emplace_back("lambda_identity_rel_err", lambda_rel);

  // Multistart agreement: evidence for uniqueness, not a certificate.
  double multistart_max = 0.0;
  for (int s = 0; s < 5; ++s) {
    ScalarField u0 = ScalarField::zero(grid);
    for (int k = 0; k < grid.num_nodes(); ++k) {
      u0.values[k] = rng.uniform(spec.lower.values[k], spec.upper.values[k]);
    }
    const ControlField start = project_admissible(u0, spec);
    const OptimalitySnapshot other = solve_bangbang(spec, opts, nullptr, &start);
    ScalarField du = other.u.field();
    du.values -= snap.u.values();
    multistart_max = std::max(multistart_max, norm(du, Norm::L1));
  }
  kv.emplace_back("multistart_max_u_dist_L1", multistart_max);

  rep.pass = lambda_rel <= 1e-9 && pontryagin_min >= -1e-8 &&
             bad_measure <= local.gap_tol / 1e-6 &&
             probe.verdict != CoercivityReport::Verdict::NotCoercive;
  rep.vacuous = vacuous_sigma;
  rep.lines.push_back(rep.pass ? "PASS" : "FAIL");

  rep.csv_path = local.out_dir + "/diagnostics.csv";
  std::ofstream out(rep.csv_path, std::ios::trunc);
  out << "# experiment = diagnostics\n# preset = " << local.preset << "\n# grid = "
      << grid.nx << "\n# seed = " << local.seed << "\nkey,value\n";
  for (const auto& [key, value] : kv) {
    out << key << ',' << g17(value) << "\n";
  }
  return rep;
}

ExperimentReport run_convergence(const ExperimentConfig& cfg) {
  ExperimentConfig local = cfg;
  local.experiment = "convergence";
  local.validate();
  std::filesystem::create_directories(local.out_dir);

  ExperimentReport rep;
  rep.name = "convergence";

  const bool constant_case = local.manufactured == "constant";
  if (!constant_case && local.manufactured != "quartic") {
    throw std::invalid_argument("unknown manufactured solution: " + local.manufactured);
  }
  // quartic bubble q(t) = t²(1−t)²: value and normal derivative vanish on the
  // rim, so the homogeneous Robin condition holds exactly for any b.
  const auto q = [](double t) { return t * t * (1.0 - t) * (1.0 - t); };
  const auto qpp = [](double t) { return 2.0 - 12.0 * t + 12.0 * t * t; };

  std::vector<double> hs, errs;
  for (int n : local.grids) {
    const GridSpec grid = GridSpec::unit_square(n, n);
    const EllipticOperator op = EllipticOperator::assemble(
        grid, ScalarField::constant(grid, 1.0), ScalarField::constant(grid, 1.0));
    ScalarField exact = ScalarField::zero(grid);
    ScalarField rhs = ScalarField::zero(grid);
    if (!constant_case) {
      exact = ScalarField::from_function(
          grid, [&q](double x1, double x2) { return q(x1) * q(x2); });
      rhs = ScalarField::from_function(grid, [&](double x1, double x2) {
        return -(qpp(x1) * q(x2) + q(x1) * qpp(x2));
      });
    }
    const ScalarField y = op.solve_shifted(ScalarField::zero(grid), rhs);
    ScalarField err = y;
    err.values -= exact.values;
    hs.push_back(grid.hx);
    errs.push_back(norm(err, Norm::Linf));
  }

  rep.csv_path = local.out_dir + "/convergence.csv";
  {
    std::ofstream out(rep.csv_path, std::ios::trunc);
    out << "# experiment = convergence\n# manufactured = " << local.manufactured
        << "\nn,h,err_linf\n";
    for (std::size_t k = 0; k < hs.size(); ++k) {
      out << local.grids[k] << ',' << g17(hs[k]) << ',' << g17(errs[k]) << "\n";
    }
  }

  const bool all_exact =
      std::all_of(errs.begin(), errs.end(), [](double e) { return e < 1e-12; });
  if (all_exact) {
    rep.lines.push_back("errors at rounding floor; slope fit skipped, reported exact");
    rep.pass = true;
    rep.vacuous = true;
  } else {
    if (hs.size() < 4) {
      // fit_rate needs 4 samples; 3 grids give one slope estimate per pair.
      double slope_min = std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k + 1 < hs.size(); ++k) {
        slope_min = std::min(slope_min, std::log(errs[k + 1] / errs[k]) /
                                            std::log(hs[k + 1] / hs[k]));
      }
      rep.lines.push_back("pairwise slope min = " + g17(slope_min));
      rep.pass = slope_min >= 1.8;
    } else {
      rep.rate = fit_rate(hs, errs);
      rep.rate_valid = true;
      rep.lines.push_back("fitted slope = " + g17(rep.rate.exponent));
      rep.pass = rep.rate.exponent >= 1.8;
    }
  }
  rep.lines.push_back(rep.pass ? "PASS" : "FAIL");
  return rep;
}

}  // namespace bbopt
