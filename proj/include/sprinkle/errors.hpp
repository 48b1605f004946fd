#pragma once

#include <stdexcept>
#include <string>

namespace sprinkle {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Argument outside the analyticity domain of Phi or of a functional.
struct DomainError : Error {
  using Error::Error;
};

/// Grid too coarse for the requested kernel, bump or Haar index.
struct ResolutionError : Error {
  using Error::Error;
};

struct ValidationError : Error {
  using Error::Error;
};

/// Non-finite state during time stepping.
struct DivergenceError : Error {
  DivergenceError(const std::string& what, double last_good_time)
      : Error(what), last_good_time(last_good_time)
  {
  }
  double last_good_time;
};

/// Two trajectories sampled on different grids or time stamps.
struct AlignmentError : Error {
  using Error::Error;
};

/// Requested time outside the stored trajectory.
struct CoverageError : Error {
  using Error::Error;
};

/// Dense operator assembly requested on a grid that is too large.
struct SizeError : Error {
  using Error::Error;
};

/// An experiment guard (e.g. boundary leakage) tripped.
struct ExperimentError : Error {
  using Error::Error;
};

struct ConfigError : Error {
  ConfigError(const std::string& what, int line) : Error(what), line(line) {}
  int line; ///< 1-based, 0 when unknown
};

} // namespace sprinkle
