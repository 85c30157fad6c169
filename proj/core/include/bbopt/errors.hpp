#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace bbopt {

/// Two fields on different grids were combined.
class GridMismatchError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Operator assembly rejected: the diffusion coefficient is not uniformly
/// positive, so the bilinear form is not coercive.
class CoercivityError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Operator assembly rejected: the Robin coefficient vanishes identically,
/// leaving constants in the kernel of the operator.
class SingularOperatorError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A linear solve or identity check left a residual above its tolerance.
class NumericalError : public std::runtime_error {
public:
  NumericalError(const std::string& what, double residual)
      : std::runtime_error(what), residual_(residual) {}
  double residual() const { return residual_; }

private:
  double residual_ = 0.0;
};

/// An iteration hit its cap before reaching tolerance. Carries the residual
/// (or primal-gap) history for diagnosis.
class NonconvergenceError : public std::runtime_error {
public:
  NonconvergenceError(const std::string& what, std::vector<double> history)
      : std::runtime_error(what), history_(std::move(history)) {}
  const std::vector<double>& history() const { return history_; }

private:
  std::vector<double> history_;
};

/// A regression or sweep was requested with too few usable samples.
class InsufficientDataError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A perturbation or input violated a stated membership requirement.
class PreconditionError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

}  // namespace bbopt
