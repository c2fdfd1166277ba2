#pragma once

#include <stdexcept>
#include <string>

namespace hyperflow {

/// Root of the library's exception hierarchy.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A caller broke a documented precondition (bad index, bad config, ...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A geometric or numerical invariant failed at run time.
class InvariantViolation : public Error {
 public:
  using Error::Error;
};

/// A time step produced an invalid state; the caller may retry with a smaller step.
class StepRejected : public InvariantViolation {
 public:
  using InvariantViolation::InvariantViolation;
};

}  // namespace hyperflow
