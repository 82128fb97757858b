#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace aghf {

/// Coarse error classes. The CLI maps these onto exit codes.
enum class ErrorCategory {
  contract,           // dimension mismatch, bad arguments
  lookup,             // unknown builtin / case name
  config,             // invalid run configuration
  frame_completion,   // F rank-deficient, no completion exists
  singular_frame,     // F̄ numerically singular
  stiffness,          // step size underflow in the flow solver
  constraint,         // barrier constraint violated
  divergence,         // non-finite state in forward integration
  precondition,       // error-bound inputs below measured quantities
};

inline std::string_view to_string(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::contract: return "contract_violation";
    case ErrorCategory::lookup: return "lookup";
    case ErrorCategory::config: return "config";
    case ErrorCategory::frame_completion: return "frame_completion";
    case ErrorCategory::singular_frame: return "singular_frame";
    case ErrorCategory::stiffness: return "stiffness";
    case ErrorCategory::constraint: return "constraint_violation";
    case ErrorCategory::divergence: return "divergence";
    case ErrorCategory::precondition: return "precondition";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

/// Thrown when F̄(x) is too ill-conditioned to invert.
class SingularFrameError : public Error {
 public:
  SingularFrameError(const std::string& what, double condition)
      : Error(ErrorCategory::singular_frame, what), condition_(condition) {}
  double condition() const noexcept { return condition_; }

  /// Grid node where the failure happened, -1 when not on a grid.
  int node = -1;
  /// Homotopy parameter at failure, negative when unknown.
  double s = -1.0;

 private:
  double condition_;
};

class ConstraintViolation : public Error {
 public:
  ConstraintViolation(const std::string& what, std::string constraint)
      : Error(ErrorCategory::constraint, what), constraint_(std::move(constraint)) {}
  const std::string& constraint() const noexcept { return constraint_; }

 private:
  std::string constraint_;
};

inline void require(bool cond, ErrorCategory category, const std::string& msg) {
  if (!cond) throw Error(category, msg);
}

inline void require_dims(bool cond, const std::string& msg) {
  if (!cond) throw Error(ErrorCategory::contract, "dimension mismatch: " + msg);
}

}  // namespace aghf
