#pragma once

#include <stdexcept>
#include <string>

namespace foodchain {

/// Input outside the mathematical domain of an operation (negative density,
/// nonpositive parameter, singular ratio term, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Invalid run configuration. Carries the offending line when known (0 = none).
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what, int line = 0)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}

  int line() const noexcept { return line_; }

 private:
  int line_;
};

/// Numerical failure during a run (NaN, divergence).
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace foodchain
