#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace twistcmc {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed expression text. `offset` is a zero-based byte offset into the source.
class ParseError : public Error {
 public:
  ParseError(const std::string& message, std::size_t offset)
      : Error(message + " at offset " + std::to_string(offset)), offset_(offset) {}
  [[nodiscard]] std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

/// Evaluation left the domain of an operation (log of a non-positive value, x/0, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Fields defined on different grids were combined.
class GridMismatch : public Error {
 public:
  using Error::Error;
};

/// Right-hand side of the Poisson problem has nonzero volume integral.
class SolvabilityError : public Error {
 public:
  using Error::Error;
};

class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& message, double residual)
      : Error(message), residual_(residual) {}
  [[nodiscard]] double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

/// Scenario data violates a structural requirement (positivity, signature, window, ...).
class ScenarioError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace twistcmc
