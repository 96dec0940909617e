#pragma once

#include <stdexcept>
#include <string>

namespace psps {

/// Malformed or inconsistent input data (files, JSON fields, CSV rows).
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration: thresholds, scenario specs, solver settings.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Model construction failed (missing risk data, zero demand, ...).
class BuildError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Solver backend or oracle failure.
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace psps
