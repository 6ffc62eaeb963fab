#pragma once

#include <stdexcept>
#include <string>

namespace impactlab {

// Argument outside the mathematical domain of a function (e.g. t outside [0, T]).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Strategy violates admissibility: nonzero terminal position, non-finite
// value, or position cap exceeded.
class AdmissibilityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Trade sequence does not liquidate the initial position.
class ConstraintViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Inputs of mismatched shape (grid vs. strategy vs. path lengths).
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Invalid model, strategy or experiment parameters.
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Base for "this model cannot be used with this construction".
class ModelMismatch : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Drift has no implemented conditional-expectation formula for Z.
class UnsupportedDrift : public ModelMismatch {
 public:
  using ModelMismatch::ModelMismatch;
};

// Drift is not absolutely continuous: expected costs are unbounded below and
// no optimal strategy exists. Use the exploit construction instead.
class NotAbsolutelyContinuous : public ModelMismatch {
 public:
  using ModelMismatch::ModelMismatch;
};

// Drift derivative is not a semimartingale; the infimum is not attained.
class NoOptimalStrategy : public ModelMismatch {
 public:
  using ModelMismatch::ModelMismatch;
};

// Malformed or inconsistent experiment configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace impactlab
