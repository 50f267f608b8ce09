#pragma once

#include <stdexcept>
#include <string>

namespace rgd {

/// Raised when an operation receives data that violates its preconditions
/// (empty samples, non-finite entries, mismatched dimensions).
class InvalidInput : public std::invalid_argument {
 public:
  explicit InvalidInput(const std::string& what) : std::invalid_argument(what) {}
};

/// Raised when a configuration object is internally inconsistent.
class InvalidConfig : public std::invalid_argument {
 public:
  explicit InvalidConfig(const std::string& what) : std::invalid_argument(what) {}
};

}  // namespace rgd
