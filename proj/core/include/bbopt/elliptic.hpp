#pragma once

#include <Eigen/SparseCore>
#include <memory>

#include "bbopt/grid.hpp"

namespace bbopt {

/// One factorized (or iteratively solvable) shifted system  M + diag(w∘α).
/// Reusable across right-hand sides; solve() enforces the residual tolerance
/// ‖A y − rhs‖∞ ≤ tol·‖rhs‖∞ by iterative refinement.
class ShiftedSystem {
 public:
  explicit ShiftedSystem(Eigen::SparseMatrix<double> matrix);
  ~ShiftedSystem();
  ShiftedSystem(ShiftedSystem&&) noexcept;
  ShiftedSystem& operator=(ShiftedSystem&&) noexcept;

  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const;
  static constexpr double kResidualTol = 1e-12;

  /// Unknown count above which the direct factorization is replaced by
  /// conjugate gradients.
  static constexpr int kDirectLimit = 100000;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Discrete realization of the weak form
///
///   ∫ a ∇y·∇φ dx + ∫_rim b y φ ds = ∫ h φ dx
///
/// on the tensor grid: 5-point stencil with arithmetic face averages of a,
/// Robin term added to rim diagonal entries with 1-D trapezoid weights.
/// The assembled matrix is exactly symmetric, and positive definite whenever
/// a ≥ α₀ > 0 and b ≥ 0 with b not identically zero.
class EllipticOperator {
 public:
  /// Requires a > 0 everywhere (else CoercivityError) and b ≥ 0 on the rim
  /// with max b > 0 (else SingularOperatorError). Only rim values of b_rim
  /// are read.
  static EllipticOperator assemble(const GridSpec& grid, const ScalarField& a,
                                   const ScalarField& b_rim);

  const GridSpec& grid() const { return grid_; }
  const Eigen::SparseMatrix<double>& matrix() const { return m_; }
  const Eigen::VectorXd& quad_weights() const { return quad_w_; }

  /// Weak-form action divided by the quadrature weights, so that
  /// solve_shifted with α = 0 inverts apply exactly (to solver tolerance).
  ScalarField apply(const ScalarField& y) const;

  /// Solve  ℒy + α∘y = h  with α ≥ 0 nodewise. In matrix terms the system is
  /// (M + diag(w∘α)) y = w∘h, solved to relative residual 1e-12 in ∞-norm.
  ScalarField solve_shifted(const ScalarField& alpha, const ScalarField& h) const;

  /// Factorization for the given nodal shift, cached and shared: repeated
  /// solves against one α cost a back-substitution each.
  std::shared_ptr<const ShiftedSystem> shifted_system(const Eigen::VectorXd& alpha) const;

 private:
  EllipticOperator() = default;

  GridSpec grid_;
  Eigen::SparseMatrix<double> m_;
  Eigen::VectorXd quad_w_;
  struct Cache;
  std::shared_ptr<Cache> cache_;
};

}  // namespace bbopt
