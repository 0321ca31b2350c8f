#pragma once

#include <stdexcept>
#include <string>

namespace capi {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An MDP, feature map or policy violates its structural invariants.
class InvalidModel : public Error {
 public:
  using Error::Error;
};

/// A local-access simulator was queried at a state it has never returned.
class AccessViolation : public Error {
 public:
  using Error::Error;
};

class InvalidParams : public Error {
 public:
  using Error::Error;
};

class LengthMismatch : public Error {
 public:
  using Error::Error;
};

class NotPresent : public Error {
 public:
  using Error::Error;
};

/// A rank-one downdate or inverse refresh lost positive definiteness or
/// drifted from the directly computed inverse.
class NumericalBreakdown : public Error {
 public:
  using Error::Error;
};

class SingularSystem : public Error {
 public:
  using Error::Error;
};

class TooManyPolicies : public Error {
 public:
  using Error::Error;
};

class TooManyActions : public Error {
 public:
  using Error::Error;
};

class QueryBudgetExceeded : public Error {
 public:
  using Error::Error;
};

/// A debug-mode invariant check (dense snapshot, inverse agreement, level
/// optimality) failed.
class CertificationFailure : public Error {
 public:
  using Error::Error;
};

}  // namespace capi
