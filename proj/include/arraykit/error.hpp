#pragma once

#include <stdexcept>
#include <string>

namespace arraykit {

/// Raised for invalid input data, failed integrity checks and violated
/// preconditions of an analysis. The CLI maps it to exit status 2.
class DataError : public std::runtime_error {
public:
  explicit DataError(const std::string &what) : std::runtime_error(what) {}
};

/// Raised for malformed parameters (unknown method names, out-of-range
/// options). The CLI maps it to exit status 1.
class UsageError : public std::runtime_error {
public:
  explicit UsageError(const std::string &what) : std::runtime_error(what) {}
};

}  // namespace arraykit
