#include "bbopt/optimize.hpp"

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>

namespace bbopt {

namespace {

constexpr double kArmijoSlope = 1e-4;
constexpr int kMaxHalvings = 40;

struct EngineSetup {
  const ProblemSpec* spec;
  ProblemSpec spec_eff;  // spec with d replaced by d + ξ(x,y)
  const PerturbationTriple* lifts;
  const NonlinearPerturbation* zeta;
  bool convex = false;  // η_uu > 0 somewhere: pointwise minimization branch

  EngineSetup(const ProblemSpec& s, const PerturbationTriple* l,
              const NonlinearPerturbation* z)
      : spec(&s), spec_eff(s), lifts(l), zeta(z) {}
};

EngineSetup make_setup(const ProblemSpec& spec, const PerturbationTriple* lifts,
                       const NonlinearPerturbation* zeta) {
  EngineSetup st(spec, lifts, zeta);
  if (zeta != nullptr && zeta->has_xi()) {
    const CoefficientFn base_d = spec.d;
    const auto xi = zeta->xi;
    // ξ carries no second y-derivative; the perturbed system only needs ξ, ξ_y.
    st.spec_eff.d = [base_d, xi](double x1, double x2, double y) {
      Deriv2 out = base_d(x1, x2, y);
      const XiDeriv x = xi(x1, x2, y);
      out.v += x.v;
      out.dy += x.dy;
      return out;
    };
  }
  if (zeta != nullptr && zeta->has_eta()) {
    const double u_ref = std::max(norm(spec.lower, Norm::Linf), norm(spec.upper, Norm::Linf));
    for (double y : {-1.0, 0.0, 1.0}) {
      for (double u : {-u_ref, 0.0, u_ref}) {
        if (zeta->eta(0.5, 0.5, y, u).duu > 1e-14) st.convex = true;
      }
    }
  }
  return st;
}

double eta_fn(const EngineSetup& st, double x1, double x2, double y, double u) {
  return (st.zeta != nullptr && st.zeta->has_eta()) ? st.zeta->eta(x1, x2, y, u).v : 0.0;
}

/// Perturbed objective: ∫ [w + s·u + η(x,y,u) + η_lift·y − ρ·u] dx.
double merit(const EngineSetup& st, const ControlField& u, const ScalarField& y) {
  const ProblemSpec& spec = *st.spec;
  const GridSpec& g = spec.grid;
  double acc = 0.0;
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      const double x1 = g.x1(i);
      const double x2 = g.x2(j);
      const double uv = u.field()(i, j);
      const double yv = y(i, j);
      double cell = spec.w(x1, x2, yv).v + spec.s(x1, x2, yv).v * uv +
                    eta_fn(st, x1, x2, yv, uv);
      if (st.lifts != nullptr) {
        cell += st.lifts->eta(i, j) * yv - st.lifts->rho(i, j) * uv;
      }
      acc += g.quad_weight(i, j) * cell;
    }
  }
  return acc;
}

ScalarField solve_engine_state(const EngineSetup& st, const ControlField& u,
                               NewtonReport* rep = nullptr) {
  const ScalarField* lift = st.lifts != nullptr ? &st.lifts->xi : nullptr;
  return solve_state(st.spec_eff, u, lift, NewtonOptions{}, rep);
}

ScalarField solve_engine_adjoint(const EngineSetup& st, const ControlField& u,
                                 const ScalarField& y) {
  const ProblemSpec& spec = *st.spec;
  const ScalarField alpha = st.spec_eff.eval(st.spec_eff.d, y).dy;  // d_y + ξ_y ≥ 0
  const auto ww = spec.eval(spec.w, y);
  const auto ss = spec.eval(spec.s, y);
  ScalarField rhs = ScalarField::zero(spec.grid);
  rhs.values = ww.dy.values + ss.dy.values.cwiseProduct(u.values());
  if (st.zeta != nullptr && st.zeta->has_eta()) {
    const GridSpec& g = spec.grid;
    for (int j = 0; j < g.ny; ++j) {
      for (int i = 0; i < g.nx; ++i) {
        rhs(i, j) += st.zeta->eta(g.x1(i), g.x2(j), y(i, j), u.field()(i, j)).dy;
      }
    }
  }
  if (st.lifts != nullptr) {
    rhs.values += st.lifts->eta.values;
  }
  return spec.op.solve_shifted(alpha, rhs);
}

/// Pointwise minimizer of φ(w) = σ_eff·w + η(x,y,w) over [lo, hi], with the
/// tie rule keeping the current value where the slope is within tie_tol.
double pointwise_minimizer(const EngineSetup& st, double x1, double x2, double y,
                           double sigma_eff, double lo, double hi, double u_cur,
                           double tie_tol) {
  const bool has_eta = st.zeta != nullptr && st.zeta->has_eta();
  if (!st.convex) {
    double slope = sigma_eff;
    if (has_eta) slope += st.zeta->eta(x1, x2, y, 0.0).du;  // affine η: η_u constant in u
    if (slope > tie_tol) return lo;
    if (slope < -tie_tol) return hi;
    return u_cur;
  }
  const double dlo = sigma_eff + st.zeta->eta(x1, x2, y, lo).du;
  if (dlo >= 0.0) return lo;
  const double dhi = sigma_eff + st.zeta->eta(x1, x2, y, hi).du;
  if (dhi <= 0.0) return hi;
  const double duu_lo = st.zeta->eta(x1, x2, y, lo).duu;
  const double duu_hi = st.zeta->eta(x1, x2, y, hi).duu;
  if (std::abs(duu_lo - duu_hi) <= 1e-14 * std::max(1.0, std::abs(duu_lo)) && duu_lo > 0.0) {
    // Quadratic η: closed form anchored at 0 (for η = εu²/2 this is −σ/ε).
    const double w = -(sigma_eff + st.zeta->eta(x1, x2, y, 0.0).du) / duu_lo;
    return std::min(hi, std::max(lo, w));
  }
  double a = lo, b = hi;
  for (int it = 0; it < 100; ++it) {
    const double mid = 0.5 * (a + b);
    const double dm = sigma_eff + st.zeta->eta(x1, x2, y, mid).du;
    (dm > 0.0 ? b : a) = mid;
  }
  return 0.5 * (a + b);
}

OptimalitySnapshot finish(const EngineSetup& st, const ControlField& u, ScalarField y,
                          ScalarField p) {
  const ProblemSpec& spec = *st.spec;
  // Residuals of the (possibly perturbed) optimality system at the returned triple.
  Eigen::VectorXd rhs = spec.beta.values.cwiseProduct(u.values());
  if (st.lifts != nullptr) rhs += st.lifts->xi.values;
  Eigen::VectorXd sres = st.spec_eff.op.apply(y).values - rhs;
  const auto dd = st.spec_eff.eval(st.spec_eff.d, y);
  sres += dd.v.values;

  const auto ww = spec.eval(spec.w, y);
  const auto ss = spec.eval(spec.s, y);
  Eigen::VectorXd arhs = ww.dy.values + ss.dy.values.cwiseProduct(u.values());
  if (st.zeta != nullptr && st.zeta->has_eta()) {
    const GridSpec& g = spec.grid;
    for (int j = 0; j < g.ny; ++j) {
      for (int i = 0; i < g.nx; ++i) {
        arhs[g.node(i, j)] +=
            st.zeta->eta(g.x1(i), g.x2(j), y(i, j), u.field()(i, j)).dy;
      }
    }
  }
  if (st.lifts != nullptr) arhs += st.lifts->eta.values;
  const Eigen::VectorXd ares =
      spec.op.apply(p).values + dd.dy.values.cwiseProduct(p.values) - arhs;

  ScalarField sigma = switching(spec, y, p);
  return OptimalitySnapshot{u,
                            std::move(y),
                            std::move(p),
                            std::move(sigma),
                            sres.lpNorm<Eigen::Infinity>(),
                            ares.lpNorm<Eigen::Infinity>()};
}

OptimalitySnapshot descend(const EngineSetup& st, const SolveOptions& opts,
                           const ControlField* start, SolveStats* stats) {
  const ProblemSpec& spec = *st.spec;
  const GridSpec& g = spec.grid;

  ScalarField u0 = ScalarField::zero(g);
  if (start != nullptr) {
    u0 = start->field();
  } else {
    u0.values = 0.5 * (spec.lower.values + spec.upper.values);
  }
  ControlField u = project_admissible(u0, spec);

  ScalarField y = solve_engine_state(st, u);
  double j_cur = merit(st, u, y);

  std::vector<double> gap_history;
  std::vector<double> obj_history{j_cur};
  ScalarField p = ScalarField::zero(g);

  for (int it = 0; it < opts.max_iters; ++it) {
    p = solve_engine_adjoint(st, u, y);
    ScalarField sigma = switching(spec, y, p);

    ScalarField what = ScalarField::zero(g);
    double gap = 0.0;
    double step_l1 = 0.0;
    for (int jj = 0; jj < g.ny; ++jj) {
      for (int ii = 0; ii < g.nx; ++ii) {
        const double x1 = g.x1(ii);
        const double x2 = g.x2(jj);
        const double se =
            sigma(ii, jj) - (st.lifts != nullptr ? st.lifts->rho(ii, jj) : 0.0);
        const double uc = u.field()(ii, jj);
        const double wv =
            pointwise_minimizer(st, x1, x2, y(ii, jj), se, spec.lower(ii, jj),
                                spec.upper(ii, jj), uc, opts.tie_tol);
        what(ii, jj) = wv;
        const double qw = g.quad_weight(ii, jj);
        gap += qw * (se * (uc - wv) +
                     eta_fn(st, x1, x2, y(ii, jj), uc) - eta_fn(st, x1, x2, y(ii, jj), wv));
        step_l1 += qw * std::abs(uc - wv);
      }
    }
    if (gap < -1e-12) {
      throw NumericalError("descend: primal gap came out negative", gap);
    }
    const double residual = st.convex ? step_l1 : gap;
    gap_history.push_back(residual);

    if (residual <= opts.gap_tol) {
      if (stats != nullptr) {
        stats->iters = it;
        stats->final_gap = residual;
        stats->gap_history = gap_history;
        stats->objective_history = obj_history;
      }
      return finish(st, u, std::move(y), std::move(p));
    }

    // Armijo backtracking from the full vertex step.
    const double decrease_ref = std::max(gap, 0.0);
    double theta = 1.0;
    bool accepted = false;
    ControlField u_try = u;
    ScalarField y_try = y;
    double j_try = j_cur;
    for (int half = 0; half <= kMaxHalvings; ++half) {
      ScalarField blend = ScalarField::zero(g);
      blend.values = u.values() + theta * (what.values - u.values());
      u_try = project_admissible(blend, spec);
      y_try = solve_engine_state(st, u_try);
      j_try = merit(st, u_try, y_try);
      if (j_try <= j_cur - kArmijoSlope * theta * decrease_ref) {
        accepted = true;
        break;
      }
      theta *= 0.5;
    }
    if (!accepted && j_try > j_cur) {
      throw NonconvergenceError("descend: backtracking found no acceptable step",
                                gap_history);
    }
    u = u_try;
    y = y_try;
    j_cur = j_try;
    obj_history.push_back(j_cur);
  }
  throw NonconvergenceError("descend: iteration cap reached before tolerance",
                            gap_history);
}

}  // namespace

OptimalitySnapshot solve_bangbang(const ProblemSpec& spec, const SolveOptions& opts,
                                  const PerturbationTriple* perturbation,
                                  const ControlField* start, SolveStats* stats) {
  if (perturbation != nullptr) {
    require_same_grid(perturbation->xi, spec.beta);
    require_same_grid(perturbation->eta, spec.beta);
    require_same_grid(perturbation->rho, spec.beta);
  }
  const EngineSetup st = make_setup(spec, perturbation, nullptr);
  return descend(st, opts, start, stats);
}

OptimalitySnapshot solve_tikhonov(const ProblemSpec& spec, double epsilon,
                                  const SolveOptions& opts, const ControlField* warm_start,
                                  SolveStats* stats) {
  if (!(epsilon > 0.0)) {
    throw std::invalid_argument("solve_tikhonov: epsilon must be positive");
  }
  return solve_nonlinear_perturbed(spec, make_perturbation("tikhonov", epsilon), opts,
                                   warm_start, stats);
}

OptimalitySnapshot solve_nonlinear_perturbed(const ProblemSpec& spec,
                                             const NonlinearPerturbation& zeta,
                                             const SolveOptions& opts,
                                             const ControlField* warm_start,
                                             SolveStats* stats) {
  // Υ membership guard on the range the solve will visit.
  const double u_bound =
      std::max(norm(spec.lower, Norm::Linf), norm(spec.upper, Norm::Linf));
  ScalarField mid = ScalarField::zero(spec.grid);
  mid.values = 0.5 * (spec.lower.values + spec.upper.values);
  const ScalarField y_mid = solve_state(spec, project_admissible(mid, spec));
  const double y_bound = 2.0 * norm(y_mid, Norm::Linf) + 1.0;
  check_upsilon_membership(spec, zeta, y_bound, u_bound);

  const EngineSetup st = make_setup(spec, nullptr, &zeta);
  return descend(st, opts, warm_start, stats);
}

namespace {
constexpr char kSnapshotMagic[8] = {'B', 'B', 'S', 'N', 'A', 'P', '1', '\n'};
}

void save_snapshot(const std::string& path, const OptimalitySnapshot& snap) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw std::runtime_error("save_snapshot: cannot open " + path);
  }
  out.write(kSnapshotMagic, sizeof(kSnapshotMagic));
  const std::int32_t nx = snap.y.grid.nx;
  const std::int32_t ny = snap.y.grid.ny;
  out.write(reinterpret_cast<const char*>(&nx), sizeof(nx));
  out.write(reinterpret_cast<const char*>(&ny), sizeof(ny));
  out.write(reinterpret_cast<const char*>(&snap.state_residual), sizeof(double));
  out.write(reinterpret_cast<const char*>(&snap.adjoint_residual), sizeof(double));
  auto write_vec = [&out](const Eigen::VectorXd& v) {
    out.write(reinterpret_cast<const char*>(v.data()),
              static_cast<std::streamsize>(v.size() * sizeof(double)));
  };
  write_vec(snap.u.values());
  write_vec(snap.y.values);
  write_vec(snap.p.values);
  write_vec(snap.sigma.values);
  if (!out) {
    throw std::runtime_error("save_snapshot: write failed for " + path);
  }
}

OptimalitySnapshot load_snapshot(const std::string& path, const ProblemSpec& spec) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("load_snapshot: cannot open " + path);
  }
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kSnapshotMagic, sizeof(magic)) != 0) {
    throw std::runtime_error("load_snapshot: bad magic in " + path);
  }
  std::int32_t nx = 0, ny = 0;
  in.read(reinterpret_cast<char*>(&nx), sizeof(nx));
  in.read(reinterpret_cast<char*>(&ny), sizeof(ny));
  if (nx != spec.grid.nx || ny != spec.grid.ny) {
    throw GridMismatchError("load_snapshot: snapshot grid does not match the problem grid");
  }
  double sres = 0.0, ares = 0.0;
  in.read(reinterpret_cast<char*>(&sres), sizeof(sres));
  in.read(reinterpret_cast<char*>(&ares), sizeof(ares));
  const int n = spec.grid.num_nodes();
  auto read_field = [&in, &spec, n](ScalarField& f) {
    f = ScalarField::zero(spec.grid);
    in.read(reinterpret_cast<char*>(f.values.data()),
            static_cast<std::streamsize>(n * sizeof(double)));
  };
  ScalarField u, y, p, sigma;
  read_field(u);
  read_field(y);
  read_field(p);
  read_field(sigma);
  if (!in) {
    throw std::runtime_error("load_snapshot: truncated file " + path);
  }
  return OptimalitySnapshot{project_admissible(u, spec), std::move(y), std::move(p),
                            std::move(sigma), sres, ares};
}

}  // namespace bbopt
