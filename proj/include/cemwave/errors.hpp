#pragma once

#include <stdexcept>
#include <string>

namespace cemwave {

/// Bad user-supplied parameters (grid sizes, sweep lists, time step ratios).
class ConfigError : public std::runtime_error {
public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Input data violates a mathematical precondition (nonpositive weight, ...).
class DomainError : public std::runtime_error {
public:
  explicit DomainError(const std::string& what) : std::runtime_error(what) {}
};

/// A solve failed: singular factorization, rank deficiency, divergence.
class NumericalError : public std::runtime_error {
public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

/// File not found, malformed header, short payload.
class IoError : public std::runtime_error {
public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

/// A should-not-happen condition inside the library.
class InternalError : public std::logic_error {
public:
  explicit InternalError(const std::string& what) : std::logic_error(what) {}
};

} // namespace cemwave
