#pragma once

#include <Eigen/Core>
#include <functional>

#include "bbopt/errors.hpp"

namespace bbopt {

/// Uniform vertex-centered discretization of the unit square (0,1)².
///
/// Node (i, j) sits at (i·hx, j·hy) with flat index j·nx + i. The rim of the
/// lattice carries the boundary; the outward normal there is an axis
/// direction, which is all the Robin term needs.
struct GridSpec {
  int nx = 0;
  int ny = 0;
  double hx = 0.0;
  double hy = 0.0;

  /// nx, ny >= 3 required.
  static GridSpec unit_square(int nx, int ny);

  int num_nodes() const { return nx * ny; }
  int node(int i, int j) const { return j * nx + i; }
  double x1(int i) const { return i * hx; }
  double x2(int j) const { return j * hy; }
  bool on_rim(int i, int j) const {
    return i == 0 || j == 0 || i == nx - 1 || j == ny - 1;
  }

  /// Trapezoidal quadrature weight of node (i, j): rim nodes carry 1/2 per
  /// rim side, corners 1/4, so constants integrate to meas Ω = 1 exactly.
  double quad_weight(int i, int j) const {
    const double cx = (i == 0 || i == nx - 1) ? 0.5 : 1.0;
    const double cy = (j == 0 || j == ny - 1) ? 0.5 : 1.0;
    return hx * hy * cx * cy;
  }
  Eigen::VectorXd quad_weights() const;

  /// 1-D trapezoidal weight of the boundary line integral at a rim node;
  /// corners collect contributions from both adjacent sides. Zero off the rim.
  double rim_weight(int i, int j) const;

  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

/// A real-valued function sampled at the grid nodes.
struct ScalarField {
  GridSpec grid;
  Eigen::VectorXd values;

  static ScalarField zero(const GridSpec& g);
  static ScalarField constant(const GridSpec& g, double c);
  static ScalarField from_function(const GridSpec& g,
                                   const std::function<double(double, double)>& f);

  double operator()(int i, int j) const { return values[grid.node(i, j)]; }
  double& operator()(int i, int j) { return values[grid.node(i, j)]; }
  int size() const { return static_cast<int>(values.size()); }
  bool all_finite() const { return values.allFinite(); }
};

enum class Norm { L1, L2, Linf };

/// Throws GridMismatchError unless both fields live on the same grid.
void require_same_grid(const ScalarField& f, const ScalarField& g);

/// L1/L2 by trapezoidal quadrature; Linf is the max absolute nodal value.
double norm(const ScalarField& f, Norm kind);

/// Quadrature-weighted dot product; symmetric and bilinear.
double inner_product(const ScalarField& f, const ScalarField& g);

/// Quadrature weight of the set {x : |sigma(x)| <= eps}. Requires eps > 0.
double measure_level_set(const ScalarField& sigma, double eps);

}  // namespace bbopt
