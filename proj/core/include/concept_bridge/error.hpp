#pragma once

#include <stdexcept>
#include <string>

namespace concept_bridge {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A caller broke a documented precondition (shape, range, empty input).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Input data is unusable: non-finite values, corrupt or truncated files,
/// degenerate statistics.
class DataError : public Error {
 public:
  using Error::Error;
};

}  // namespace concept_bridge
