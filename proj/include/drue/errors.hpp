#pragma once

#include <stdexcept>
#include <string>

namespace drue {

// Bad user input: malformed config, invalid parameter ranges, unknown enum names.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// A required artifact (checkpoint, dataset, score file) is missing; the message
// names the command that produces it.
class DependencyError : public std::runtime_error {
 public:
  explicit DependencyError(const std::string& msg) : std::runtime_error(msg) {}
};

// An API precondition was violated (shape mismatch, off-simplex probabilities).
class ContractViolation : public std::runtime_error {
 public:
  explicit ContractViolation(const std::string& msg) : std::runtime_error(msg) {}
};

// Numerical failure at runtime: diverged training, non-finite intermediates.
class ComputeError : public std::runtime_error {
 public:
  explicit ComputeError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace drue
