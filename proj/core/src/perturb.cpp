#include "bbopt/perturb.hpp"

#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace bbopt {

NonlinearPerturbation zero_perturbation() { return {nullptr, nullptr, "zero"}; }

NonlinearPerturbation make_perturbation(const std::string& name, double magnitude,
                                        const std::map<std::string, double>& params) {
  auto get = [&params](const std::string& key, double fallback) {
    auto it = params.find(key);
    return it == params.end() ? fallback : it->second;
  };
  NonlinearPerturbation out;
  out.label = name;
  if (name == "tikhonov") {
    out.eta = [magnitude](double, double, double, double u) {
      return EtaDeriv{0.5 * magnitude * u * u, 0.0, magnitude * u, magnitude};
    };
  } else if (name == "state-shift") {
    out.xi = [magnitude](double, double, double y) {
      return XiDeriv{magnitude * y, magnitude};
    };
  } else if (name == "cost-tilt") {
    out.eta = [magnitude](double, double, double, double u) {
      return EtaDeriv{magnitude * u, 0.0, magnitude, 0.0};
    };
  } else if (name == "smooth-bump") {
    const double cx = get("bump_center_x", 0.5);
    const double cy = get("bump_center_y", 0.5);
    const double width = get("bump_width", 0.2);
    if (!(width > 0.0)) {
      throw std::invalid_argument("smooth-bump: width must be positive");
    }
    out.xi = [magnitude, cx, cy, width](double x1, double x2, double) {
      const double r2 = (x1 - cx) * (x1 - cx) + (x2 - cy) * (x2 - cy);
      return XiDeriv{magnitude * std::exp(-r2 / (width * width)), 0.0};
    };
  } else {
    throw std::invalid_argument("unknown perturbation preset: " + name);
  }
  return out;
}

void check_upsilon_membership(const ProblemSpec& spec, const NonlinearPerturbation& zeta,
                              double y_bound, double u_bound) {
  constexpr int kXSamples = 9;
  constexpr int kYSamples = 33;
  constexpr double kSlack = 1e-12;
  for (int ix = 0; ix < kXSamples; ++ix) {
    for (int jx = 0; jx < kXSamples; ++jx) {
      const double x1 = static_cast<double>(ix) / (kXSamples - 1);
      const double x2 = static_cast<double>(jx) / (kXSamples - 1);
      for (int ky = 0; ky < kYSamples; ++ky) {
        const double y = -y_bound + 2.0 * y_bound * ky / (kYSamples - 1);
        if (zeta.has_xi()) {
          const double slope = spec.d(x1, x2, y).dy + zeta.xi(x1, x2, y).dy;
          if (slope < -kSlack) {
            throw PreconditionError(
                "perturbation leaves the admissible state family: d_y + xi_y = " +
                std::to_string(slope) + " < 0 at x = (" + std::to_string(x1) + ", " +
                std::to_string(x2) + "), y = " + std::to_string(y));
          }
        }
        if (zeta.has_eta()) {
          for (int ku = 0; ku < kYSamples; ++ku) {
            const double u = -u_bound + 2.0 * u_bound * ku / (kYSamples - 1);
            const double curv = zeta.eta(x1, x2, y, u).duu;
            if (curv < -kSlack) {
              throw PreconditionError(
                  "perturbation cost is not convex in u: eta_uu = " + std::to_string(curv) +
                  " at x = (" + std::to_string(x1) + ", " + std::to_string(x2) +
                  "), y = " + std::to_string(y) + ", u = " + std::to_string(u));
            }
          }
        }
      }
    }
  }
}

namespace {

/// Max of |w1 − w2| over the lattice on the box: the first domain_dims axes
/// span [0,1] (fixed across m), the remaining axes span [−m, m].
double lattice_sup(const PointFn& w1, const PointFn& w2, int dims, int domain_dims,
                   int m, int samples_per_axis) {
  std::vector<double> point(dims, 0.0);
  std::vector<int> idx(dims, 0);
  double sup = 0.0;
  while (true) {
    for (int d_ = 0; d_ < dims; ++d_) {
      const double t = static_cast<double>(idx[d_]) / (samples_per_axis - 1);
      point[d_] = d_ < domain_dims ? t : -static_cast<double>(m) + 2.0 * m * t;
    }
    const std::span<const double> p(point);
    const double v1 = w1 ? w1(p) : 0.0;
    const double v2 = w2 ? w2(p) : 0.0;
    sup = std::max(sup, std::abs(v1 - v2));
    int d_ = 0;
    for (; d_ < dims; ++d_) {
      if (++idx[d_] < samples_per_axis) break;
      idx[d_] = 0;
    }
    if (d_ == dims) break;
  }
  return sup;
}

}  // namespace

DcValue dc_metric(const PointFn& omega1, const PointFn& omega2, int dims, int m_max,
                  int samples_per_axis, int domain_dims) {
  if (dims < 1 || domain_dims < 0 || domain_dims > dims) {
    throw std::invalid_argument("dc_metric: bad dimensions");
  }
  if (m_max < 8) {
    throw std::invalid_argument("dc_metric: need m_max >= 8");
  }
  if (samples_per_axis < 33) {
    throw std::invalid_argument("dc_metric: need samples_per_axis >= 33");
  }
  double acc = 0.0;
  double scale = 0.5;
  for (int m = 1; m <= m_max; ++m, scale *= 0.5) {
    const double r = lattice_sup(omega1, omega2, dims, domain_dims, m, samples_per_axis);
    acc += scale * r / (1.0 + r);
  }
  return DcValue{acc, std::pow(2.0, -m_max)};
}

DcValue d_upsilon(const NonlinearPerturbation& zeta, const NonlinearPerturbation& zeta_ref,
                  int m_max, int samples_per_axis) {
  auto xi_val = [](const NonlinearPerturbation& z) -> PointFn {
    if (!z.has_xi()) return nullptr;
    return [&z](std::span<const double> p) { return z.xi(p[0], p[1], p[2]).v; };
  };
  auto xi_dy = [](const NonlinearPerturbation& z) -> PointFn {
    if (!z.has_xi()) return nullptr;
    return [&z](std::span<const double> p) { return z.xi(p[0], p[1], p[2]).dy; };
  };
  auto eta_dy = [](const NonlinearPerturbation& z) -> PointFn {
    if (!z.has_eta()) return nullptr;
    return [&z](std::span<const double> p) { return z.eta(p[0], p[1], p[2], p[3]).dy; };
  };
  auto eta_du = [](const NonlinearPerturbation& z) -> PointFn {
    if (!z.has_eta()) return nullptr;
    return [&z](std::span<const double> p) { return z.eta(p[0], p[1], p[2], p[3]).du; };
  };

  const DcValue a = dc_metric(xi_val(zeta), xi_val(zeta_ref), 3, m_max, samples_per_axis, 2);
  const DcValue b = dc_metric(xi_dy(zeta), xi_dy(zeta_ref), 3, m_max, samples_per_axis, 2);
  const DcValue c = dc_metric(eta_dy(zeta), eta_dy(zeta_ref), 4, m_max, samples_per_axis, 2);
  const DcValue d = dc_metric(eta_du(zeta), eta_du(zeta_ref), 4, m_max, samples_per_axis, 2);
  return DcValue{a.value + b.value + c.value + d.value,
                 a.tail_bound + b.tail_bound + c.tail_bound + d.tail_bound};
}

int metlem_constant(double k_bound) {
  if (!(k_bound > 0.0)) {
    throw std::invalid_argument("metlem_constant: k_bound must be positive");
  }
  return std::max(1, static_cast<int>(std::ceil(k_bound)));
}

}  // namespace bbopt
