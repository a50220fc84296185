#pragma once

#include <stdexcept>
#include <string>

namespace rydmix {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad input: non-finite numbers, violated preconditions, malformed scenarios.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A numerical routine could not produce a trustworthy result.
class SolverError : public Error {
 public:
  using Error::Error;
};

}  // namespace rydmix
