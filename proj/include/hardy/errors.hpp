#pragma once

#include <stdexcept>
#include <string>

namespace hardy {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A ket or wavefunction term has support on modes the operation does not act on.
class StageMismatch : public Error {
 public:
  using Error::Error;
};

/// The annihilation projector removed all of the norm.
class ZeroSurvival : public Error {
 public:
  using Error::Error;
};

/// A probability table was requested for a ket whose norm is not one.
class NotNormalized : public Error {
 public:
  using Error::Error;
};

/// A layout or scenario violates one of its bounds. The message names the bound.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Field evaluation outside the validity interval of a state, or a finite
/// difference stencil that straddles an event.
class IntervalError : public Error {
 public:
  using Error::Error;
};

/// |v| >= 1 in units of c.
class SuperluminalBoost : public Error {
 public:
  using Error::Error;
};

}  // namespace hardy
