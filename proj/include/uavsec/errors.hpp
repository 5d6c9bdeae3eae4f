#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace uavsec {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A UAV position fell inside an eavesdropper's uncertainty disc.
class EveExclusionViolated : public Error {
 public:
  EveExclusionViolated(std::size_t eve, double distance, double radius)
      : Error("UAV position at distance " + std::to_string(distance) +
              " m from eavesdropper estimate " + std::to_string(eve) +
              " lies inside its uncertainty radius " + std::to_string(radius) + " m"),
        eve_index(eve) {}
  std::size_t eve_index;
};

/// |d - r| collapsed to (almost) zero in a worst-case ground distance.
class DegenerateDistance : public Error {
 public:
  using Error::Error;
};

/// No feasible (trajectory, power) pair exists for the scenario.
class InfeasibleScenario : public Error {
 public:
  using Error::Error;
};

/// The reference trajectory handed to the trajectory subproblem is unusable.
class ReferenceInfeasible : public Error {
 public:
  using Error::Error;
};

class NumericalFailure : public Error {
 public:
  using Error::Error;
};

/// Malformed input document (syntax or type).
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Well-formed input that violates a model invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

}  // namespace uavsec
