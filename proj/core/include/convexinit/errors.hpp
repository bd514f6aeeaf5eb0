#pragma once

#include <stdexcept>
#include <string>

namespace convexinit {

/// Base class for every domain error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An argument lies outside its documented domain.
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// Operand dimensions do not agree.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Requested initialisation has no admissible solution.
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

/// Moment propagation produced a non-positive variance or an empty level set.
class DegenerateError : public Error {
 public:
  using Error::Error;
};

/// Operation is not defined for the network variant it was called on.
class VariantError : public Error {
 public:
  using Error::Error;
};

/// Malformed file contents (IDX, checkpoint, config).
class FormatError : public Error {
 public:
  using Error::Error;
};

/// A value became NaN or infinite.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Training loss stopped being finite.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

/// No bracket for the requested level could be found along a ray.
class UnreachableLevelError : public Error {
 public:
  using Error::Error;
};

}  // namespace convexinit
