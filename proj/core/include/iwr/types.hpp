#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <stdexcept>
#include <string>

namespace iwr {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Raised when an argument violates a documented precondition.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when an operation needs structure the problem does not have
/// (smoothness, generator sets, serializable data).
class UnsupportedProblem : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Position of an inner step: epoch K (0-based) and inner step i (1-based,
/// i = 1..n), so that step (K, i) carries the step size alpha_{K,i}.
struct StepIndex {
  std::size_t epoch = 0;
  std::size_t inner = 0;

  friend bool operator==(const StepIndex&, const StepIndex&) = default;
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw InvalidArgument(message);
}

}  // namespace iwr
