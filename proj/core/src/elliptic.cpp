#include "bbopt/elliptic.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>
#include <cmath>
#include <deque>
#include <mutex>
#include <vector>

namespace bbopt {

struct ShiftedSystem::Impl {
  Eigen::SparseMatrix<double> a;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;
  Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper> cg;
  bool direct = true;
};

ShiftedSystem::ShiftedSystem(Eigen::SparseMatrix<double> matrix)
    : impl_(std::make_unique<Impl>()) {
  impl_->a = std::move(matrix);
  impl_->direct = impl_->a.rows() <= kDirectLimit;
  if (impl_->direct) {
    impl_->ldlt.compute(impl_->a);
    if (impl_->ldlt.info() != Eigen::Success) {
      throw NumericalError("ShiftedSystem: LDLT factorization failed", 0.0);
    }
  } else {
    impl_->cg.setTolerance(1e-14);
    impl_->cg.setMaxIterations(20 * impl_->a.rows());
    impl_->cg.compute(impl_->a);
  }
}

ShiftedSystem::~ShiftedSystem() = default;
ShiftedSystem::ShiftedSystem(ShiftedSystem&&) noexcept = default;
ShiftedSystem& ShiftedSystem::operator=(ShiftedSystem&&) noexcept = default;

Eigen::VectorXd ShiftedSystem::solve(const Eigen::VectorXd& rhs) const {
  const double rhs_inf = rhs.lpNorm<Eigen::Infinity>();
  if (rhs_inf == 0.0) {
    return Eigen::VectorXd::Zero(rhs.size());
  }
  Eigen::VectorXd x = impl_->direct ? Eigen::VectorXd(impl_->ldlt.solve(rhs))
                                    : Eigen::VectorXd(impl_->cg.solve(rhs));
  double res = (rhs - impl_->a * x).lpNorm<Eigen::Infinity>();
  // Iterative refinement until the relative residual tolerance holds.
  for (int pass = 0; pass < 5 && res > kResidualTol * rhs_inf; ++pass) {
    const Eigen::VectorXd r = rhs - impl_->a * x;
    x += impl_->direct ? Eigen::VectorXd(impl_->ldlt.solve(r))
                       : Eigen::VectorXd(impl_->cg.solve(r));
    res = (rhs - impl_->a * x).lpNorm<Eigen::Infinity>();
  }
  if (res > kResidualTol * rhs_inf) {
    throw NumericalError("ShiftedSystem: residual above tolerance after refinement",
                         res / rhs_inf);
  }
  return x;
}

struct EllipticOperator::Cache {
  std::mutex mutex;
  std::deque<std::pair<Eigen::VectorXd, std::shared_ptr<const ShiftedSystem>>> entries;
  static constexpr std::size_t kCapacity = 8;
};

EllipticOperator EllipticOperator::assemble(const GridSpec& grid,
                                            const ScalarField& a,
                                            const ScalarField& b_rim) {
  if (!(a.grid == grid) || !(b_rim.grid == grid)) {
    throw GridMismatchError("assemble: coefficient fields must live on the target grid");
  }
  if (a.values.minCoeff() <= 0.0) {
    throw CoercivityError("assemble: diffusion coefficient must be positive everywhere");
  }

  double b_max = 0.0;
  for (int j = 0; j < grid.ny; ++j) {
    for (int i = 0; i < grid.nx; ++i) {
      if (!grid.on_rim(i, j)) continue;
      const double b = b_rim(i, j);
      if (b < 0.0) {
        throw std::invalid_argument("assemble: Robin coefficient must be nonnegative");
      }
      b_max = std::max(b_max, b);
    }
  }
  if (b_max == 0.0) {
    throw SingularOperatorError(
        "assemble: Robin coefficient vanishes identically; operator is singular");
  }

  const int n = grid.num_nodes();
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<std::size_t>(5 * n));

  // Diffusion: edge conductances with arithmetic face averages of a. Each
  // edge couples its endpoints symmetrically, so constants lie in the kernel
  // of this part and symmetry is exact by construction.
  for (int j = 0; j < grid.ny; ++j) {
    const double cy = (j == 0 || j == grid.ny - 1) ? 0.5 : 1.0;
    for (int i = 0; i + 1 < grid.nx; ++i) {
      const int n1 = grid.node(i, j);
      const int n2 = grid.node(i + 1, j);
      const double a_face = 0.5 * (a.values[n1] + a.values[n2]);
      const double k = a_face * (grid.hy * cy) / grid.hx;
      trips.emplace_back(n1, n1, k);
      trips.emplace_back(n2, n2, k);
      trips.emplace_back(n1, n2, -k);
      trips.emplace_back(n2, n1, -k);
    }
  }
  for (int j = 0; j + 1 < grid.ny; ++j) {
    for (int i = 0; i < grid.nx; ++i) {
      const double cx = (i == 0 || i == grid.nx - 1) ? 0.5 : 1.0;
      const int n1 = grid.node(i, j);
      const int n2 = grid.node(i, j + 1);
      const double a_face = 0.5 * (a.values[n1] + a.values[n2]);
      const double k = a_face * (grid.hx * cx) / grid.hy;
      trips.emplace_back(n1, n1, k);
      trips.emplace_back(n2, n2, k);
      trips.emplace_back(n1, n2, -k);
      trips.emplace_back(n2, n1, -k);
    }
  }

  // Robin term: diagonal boundary mass with 1-D trapezoid weights.
  for (int j = 0; j < grid.ny; ++j) {
    for (int i = 0; i < grid.nx; ++i) {
      if (!grid.on_rim(i, j)) continue;
      const double bw = grid.rim_weight(i, j) * b_rim(i, j);
      if (bw != 0.0) {
        trips.emplace_back(grid.node(i, j), grid.node(i, j), bw);
      }
    }
  }

  EllipticOperator op;
  op.grid_ = grid;
  op.m_.resize(n, n);
  op.m_.setFromTriplets(trips.begin(), trips.end());
  op.m_.makeCompressed();
  op.quad_w_ = grid.quad_weights();
  op.cache_ = std::make_shared<Cache>();
  return op;
}

ScalarField EllipticOperator::apply(const ScalarField& y) const {
  if (!(y.grid == grid_)) {
    throw GridMismatchError("apply: field does not live on the operator grid");
  }
  Eigen::VectorXd out = m_ * y.values;
  out.array() /= quad_w_.array();
  return {grid_, std::move(out)};
}

std::shared_ptr<const ShiftedSystem> EllipticOperator::shifted_system(
    const Eigen::VectorXd& alpha) const {
  {
    std::lock_guard<std::mutex> lock(cache_->mutex);
    for (const auto& [key, sys] : cache_->entries) {
      if (key.size() == alpha.size() && key == alpha) {
        return sys;
      }
    }
  }
  Eigen::SparseMatrix<double> a = m_;
  for (int k = 0; k < a.rows(); ++k) {
    a.coeffRef(k, k) += quad_w_[k] * alpha[k];
  }
  auto sys = std::make_shared<const ShiftedSystem>(std::move(a));
  {
    std::lock_guard<std::mutex> lock(cache_->mutex);
    cache_->entries.emplace_back(alpha, sys);
    if (cache_->entries.size() > Cache::kCapacity) {
      cache_->entries.pop_front();
    }
  }
  return sys;
}

ScalarField EllipticOperator::solve_shifted(const ScalarField& alpha,
                                            const ScalarField& h) const {
  if (!(alpha.grid == grid_) || !(h.grid == grid_)) {
    throw GridMismatchError("solve_shifted: fields do not live on the operator grid");
  }
  if (alpha.values.minCoeff() < 0.0) {
    throw std::invalid_argument("solve_shifted: shift must be nonnegative");
  }
  const auto sys = shifted_system(alpha.values);
  return {grid_, sys->solve(quad_w_.cwiseProduct(h.values))};
}

}  // namespace bbopt
