#pragma once

#include <stdexcept>
#include <string>

namespace kdp {

/// A computation produced a non-finite value or left its numeric domain.
class NumericDomainError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// No Poincare-Miranda box with the required face signs was found.
class BracketFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Newton and box bisection both failed to reach the projection tolerance.
class ProjectionFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The problem configuration cannot support the requested computation.
class ConfigurationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace kdp
