#pragma once

#include <stdexcept>
#include <string>

namespace rsnn {

/// Base class for all simulator errors. Each category maps to a process
/// exit code used by the command line tool.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what, int exit_code)
      : std::runtime_error(what), exit_code_(exit_code) {}

  int exit_code() const noexcept { return exit_code_; }

 private:
  int exit_code_;
};

/// Invalid configuration, network description or shape mismatch.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(what, 2) {}
};

/// A layer does not fit the unit geometry or a buffer overflows.
class CapacityError : public Error {
 public:
  explicit CapacityError(const std::string& what) : Error(what, 3) {}
};

/// Malformed parameter file, dataset file or out-of-range stored value.
class FormatError : public Error {
 public:
  explicit FormatError(const std::string& what) : Error(what, 4) {}
};

/// Units or buffers were driven in an order the hardware cannot follow.
class ProtocolError : public Error {
 public:
  explicit ProtocolError(const std::string& what) : Error(what, 1) {}
};

}  // namespace rsnn
