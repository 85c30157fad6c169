#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "bbopt/harness.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_dir;
  long long seed = -1;
  int grid_n = 0;
};

void attach_common(CLI::App* sub, CommonArgs* args) {
  sub->add_option("--config", args->config_path, "experiment config file (key = value)")
      ->check(CLI::ExistingFile);
  sub->add_option("--out", args->out_dir, "output directory for CSV and cache files");
  sub->add_option("--seed", args->seed, "random seed override");
  sub->add_option("--grid", args->grid_n, "grid size override (n x n nodes)");
}

bbopt::ExperimentConfig load_config(const CommonArgs& args) {
  bbopt::ExperimentConfig cfg;
  if (!args.config_path.empty()) {
    cfg = bbopt::ExperimentConfig::from_file(args.config_path);
  }
  if (!args.out_dir.empty()) cfg.out_dir = args.out_dir;
  if (args.seed >= 0) cfg.seed = static_cast<std::uint64_t>(args.seed);
  if (args.grid_n > 0) cfg.grids = {args.grid_n};
  return cfg;
}

int report_outcome(const bbopt::ExperimentReport& rep) {
  for (const auto& line : rep.lines) {
    std::cout << "[" << rep.name << "] " << line << "\n";
  }
  if (!rep.csv_path.empty()) {
    std::cout << "[" << rep.name << "] csv: " << rep.csv_path << "\n";
  }
  return rep.pass ? 0 : 2;
}

int run_solve(const bbopt::ExperimentConfig& cfg) {
  using namespace bbopt;
  const GridSpec grid = GridSpec::unit_square(cfg.grids.back(), cfg.grids.back());
  const ProblemSpec spec =
      make_problem(cfg.preset, grid, PresetParams::from_map(cfg.preset_params));
  SolveOptions opts;
  opts.gap_tol = cfg.gap_tol;
  opts.tie_tol = cfg.tie_tol;
  opts.seed = cfg.seed;
  SolveStats stats;
  const OptimalitySnapshot snap = solve_bangbang(spec, opts, nullptr, nullptr, &stats);

  double bad_measure = 0.0;
  for (int j = 0; j < grid.ny; ++j) {
    for (int i = 0; i < grid.nx; ++i) {
      const double u = snap.u.field()(i, j);
      const double lo = spec.lower(i, j);
      const double hi = spec.upper(i, j);
      if (u - lo > 1e-9 && hi - u > 1e-9 && std::abs(snap.sigma(i, j)) > 1e-6) {
        bad_measure += grid.quad_weight(i, j);
      }
    }
  }

  std::printf("[solve] preset=%s grid=%dx%d\n", cfg.preset.c_str(), grid.nx, grid.ny);
  std::printf("[solve] objective=%.12g gap=%.3e iters=%d\n",
              objective(spec, snap.u, snap.y), stats.final_gap, stats.iters);
  std::printf("[solve] state_residual=%.3e adjoint_residual=%.3e\n",
              snap.state_residual, snap.adjoint_residual);
  std::printf("[solve] non-bang-bang measure (|sigma|>1e-6): %.3e\n", bad_measure);

  std::filesystem::create_directories(cfg.out_dir);
  const std::string path = cfg.out_dir + "/solution.bbsnap";
  save_snapshot(path, snap);
  std::printf("[solve] snapshot: %s\n", path.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"bbopt: bang-bang elliptic optimal control solver and stability harness"};
  app.require_subcommand(1);

  CommonArgs args;
  auto* solve_cmd = app.add_subcommand("solve", "solve one bang-bang problem and cache the snapshot");
  auto* tik_cmd = app.add_subcommand("tikhonov", "Tikhonov regularization rate sweep");
  auto* rho_cmd = app.add_subcommand("rho-sweep", "variational-inequality perturbation sweep");
  auto* zeta_cmd = app.add_subcommand("zeta-sweep", "nonlinear perturbation sweep");
  auto* diag_cmd = app.add_subcommand("diagnose", "assumption diagnostics at the solution");
  auto* conv_cmd = app.add_subcommand("convergence", "manufactured-solution mesh convergence");
  for (auto* sub : {solve_cmd, tik_cmd, rho_cmd, zeta_cmd, diag_cmd, conv_cmd}) {
    attach_common(sub, &args);
  }

  CLI11_PARSE(app, argc, argv);

  try {
    const bbopt::ExperimentConfig cfg = load_config(args);
    if (solve_cmd->parsed()) return run_solve(cfg);
    if (tik_cmd->parsed()) return report_outcome(bbopt::run_tikhonov_sweep(cfg));
    if (rho_cmd->parsed()) return report_outcome(bbopt::run_rho_sweep(cfg));
    if (zeta_cmd->parsed()) return report_outcome(bbopt::run_zeta_sweep(cfg));
    if (diag_cmd->parsed()) return report_outcome(bbopt::run_diagnostics(cfg));
    if (conv_cmd->parsed()) return report_outcome(bbopt::run_convergence(cfg));
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
