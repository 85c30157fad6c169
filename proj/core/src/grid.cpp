#include "bbopt/grid.hpp"

#include <cmath>
#include <stdexcept>

namespace bbopt {

GridSpec GridSpec::unit_square(int nx, int ny) {
  if (nx < 3 || ny < 3) {
    throw std::invalid_argument("GridSpec: need nx, ny >= 3");
  }
  GridSpec g;
  g.nx = nx;
  g.ny = ny;
  g.hx = 1.0 / (nx - 1);
  g.hy = 1.0 / (ny - 1);
  return g;
}

Eigen::VectorXd GridSpec::quad_weights() const {
  Eigen::VectorXd w(num_nodes());
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      w[node(i, j)] = quad_weight(i, j);
    }
  }
  return w;
}

double GridSpec::rim_weight(int i, int j) const {
  if (!on_rim(i, j)) return 0.0;
  double w = 0.0;
  // Horizontal sides contribute along x; endpoints of a side get half weight.
  if (j == 0 || j == ny - 1) {
    w += (i == 0 || i == nx - 1) ? 0.5 * hx : hx;
  }
  // Vertical sides contribute along y.
  if (i == 0 || i == nx - 1) {
    w += (j == 0 || j == ny - 1) ? 0.5 * hy : hy;
  }
  return w;
}

ScalarField ScalarField::zero(const GridSpec& g) {
  return {g, Eigen::VectorXd::Zero(g.num_nodes())};
}

ScalarField ScalarField::constant(const GridSpec& g, double c) {
  return {g, Eigen::VectorXd::Constant(g.num_nodes(), c)};
}

ScalarField ScalarField::from_function(
    const GridSpec& g, const std::function<double(double, double)>& f) {
  ScalarField out = zero(g);
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      out(i, j) = f(g.x1(i), g.x2(j));
    }
  }
  return out;
}

void require_same_grid(const ScalarField& f, const ScalarField& g) {
  if (!(f.grid == g.grid)) {
    throw GridMismatchError("fields live on different grids");
  }
}

double norm(const ScalarField& f, Norm kind) {
  const GridSpec& g = f.grid;
  switch (kind) {
    case Norm::Linf:
      return f.values.size() == 0 ? 0.0 : f.values.cwiseAbs().maxCoeff();
    case Norm::L1: {
      double acc = 0.0;
      for (int j = 0; j < g.ny; ++j) {
        for (int i = 0; i < g.nx; ++i) {
          acc += g.quad_weight(i, j) * std::abs(f(i, j));
        }
      }
      return acc;
    }
    case Norm::L2: {
      double acc = 0.0;
      for (int j = 0; j < g.ny; ++j) {
        for (int i = 0; i < g.nx; ++i) {
          const double v = f(i, j);
          acc += g.quad_weight(i, j) * v * v;
        }
      }
      return std::sqrt(acc);
    }
  }
  return 0.0;
}

double inner_product(const ScalarField& f, const ScalarField& g) {
  require_same_grid(f, g);
  const GridSpec& gr = f.grid;
  double acc = 0.0;
  for (int j = 0; j < gr.ny; ++j) {
    for (int i = 0; i < gr.nx; ++i) {
      acc += gr.quad_weight(i, j) * f(i, j) * g(i, j);
    }
  }
  return acc;
}

double measure_level_set(const ScalarField& sigma, double eps) {
  if (!(eps > 0.0)) {
    throw std::invalid_argument("measure_level_set: eps must be positive");
  }
  const GridSpec& g = sigma.grid;
  double acc = 0.0;
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      if (std::abs(sigma(i, j)) <= eps) {
        acc += g.quad_weight(i, j);
      }
    }
  }
  return acc;
}

}  // namespace bbopt
