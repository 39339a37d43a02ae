#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace hisd {

/// Bad dimensions, malformed inputs, misaligned grids.
class ArgumentError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Non-finite force or Hessian action encountered while stepping.
class NumericalError : public std::runtime_error {
public:
  NumericalError(const std::string& what, std::size_t step) : std::runtime_error(what), step_(step) {}

  [[nodiscard]] std::size_t step() const noexcept { return step_; }

private:
  std::size_t step_;
};

/// Retraction of a (near) zero vector or collapse of the tangent frame.
class DegenerateError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A state produced by the stepper left the constraint set beyond tolerance.
class ConsistencyError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

}  // namespace hisd
