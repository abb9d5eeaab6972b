#pragma once

#include <stdexcept>
#include <string>

namespace bayescond {

struct ShapeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct ParameterError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct IndexError : std::out_of_range {
  using std::out_of_range::out_of_range;
};

struct ResourceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Iterative solver gave up; carries the final relative residual.
struct SolverError : std::runtime_error {
  SolverError(const std::string& msg, double residual_)
      : std::runtime_error(msg), residual(residual_) {}
  double residual;
};

// NaN/Inf detected mid-chain; carries the offending timestep.
struct DiagnosticError : std::runtime_error {
  DiagnosticError(const std::string& msg, int timestep_)
      : std::runtime_error(msg), timestep(timestep_) {}
  int timestep;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace bayescond
