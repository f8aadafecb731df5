#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace franson {

/// A parameter or argument lies outside the domain of an operation.
class InvalidParameter : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Requested work would exceed the memory guard of the simulator.
class CapacityError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Inconsistent configuration between inputs (e.g. stream resolutions).
class ConfigurationError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Count rate at or beyond the non-paralyzable dead-time limit.
class SaturationError : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

/// Contrast requested from data that cannot define one.
class UndefinedVisibility : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

/// A fitter could not derive a starting point from the data.
class InitializationError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Malformed time-tag file; carries the byte offset where decoding failed.
class FormatError : public std::runtime_error {
public:
  FormatError(const std::string &what, std::uint64_t offset)
      : std::runtime_error(what + " (at byte offset " + std::to_string(offset) + ")"),
        offset_(offset) {}

  std::uint64_t offset() const noexcept { return offset_; }

private:
  std::uint64_t offset_;
};

} // namespace franson
