#pragma once

#include <stdexcept>
#include <string>

namespace echobeam {

// Bad sizes, out-of-range parameters, malformed provider specs.
class ConfigError : public std::invalid_argument {
 public:
  explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

// Filesystem and stream failures.
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

// Structurally broken files (bad magic, truncated payload, shape mismatch).
class FormatError : public std::runtime_error {
 public:
  explicit FormatError(const std::string& what) : std::runtime_error(what) {}
};

// Non-finite values reaching a state update. State is left unchanged.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace echobeam
