#pragma once

#include <stdexcept>
#include <string>

namespace smoothpc {

// Exception hierarchy. The CLI maps each family onto a process exit code.

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A parameter lies outside its admissible range (k, t, kind, ...).
class InvalidParameter : public Error {
 public:
  using Error::Error;
};

/// Input data violates a type invariant (non-finite coordinates, shape mismatch).
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// Score target requested at t where b_t = 0.
class SingularTime : public Error {
 public:
  using Error::Error;
};

/// Constraint mode requires capabilities the score field does not have.
class UnsupportedMode : public Error {
 public:
  using Error::Error;
};

/// Non-finite value produced during training or sampling.
class NumericalAbort : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Malformed or inconsistent run configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace smoothpc
