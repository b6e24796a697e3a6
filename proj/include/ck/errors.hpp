#pragma once

#include <stdexcept>
#include <string>

namespace ck {

// Bad configuration, unknown ids, shape mismatches. CLI exit code 2.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Evaluation outside a closure's validity region (e.g. covolume limit).
struct DomainError : std::runtime_error {
  explicit DomainError(const std::string& msg) : std::runtime_error(msg) {}
};

// Non-finite loss or divergence during optimization. CLI exit code 3.
struct TrainError : std::runtime_error {
  explicit TrainError(const std::string& msg) : std::runtime_error(msg) {}
};

// Positivity failure or closure breakdown inside the solver. CLI exit code 4.
struct SolverError : std::runtime_error {
  explicit SolverError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace ck
