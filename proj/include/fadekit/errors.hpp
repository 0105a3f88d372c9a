#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace fadekit {

/// Operand shapes (sequence dimension, matrix sizes) do not agree.
class DimensionMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An input reaches below the explicit window of a kernel whose tail is not zero.
/// Carries the sum over the explicit window and a certified bound on what was left out.
class WindowUnderflow : public std::runtime_error {
 public:
  WindowUnderflow(Eigen::VectorXd partial, double residual_bound)
      : std::runtime_error("input support extends below the kernel window; residual bound " +
                           std::to_string(residual_bound)),
        partial_(std::move(partial)),
        residual_bound_(residual_bound) {}

  const Eigen::VectorXd& partial() const noexcept { return partial_; }
  double residual_bound() const noexcept { return residual_bound_; }

 private:
  Eigen::VectorXd partial_;
  double residual_bound_;
};

class NotLinear : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NoWeighting : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class Unsupported : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class Unstable : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class StabilityUndecided : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NumericalFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class OrthogonalityNotCertified : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace fadekit
