#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace psf {

// Base for everything the library throws on contract violations.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class SolverError : public Error {
 public:
  enum class Kind { ZeroDiagonal, NonFinite, PivotFailure, CapExceeded, DimensionMismatch };

  SolverError(Kind kind, std::string what, std::ptrdiff_t index = -1)
      : Error(std::move(what)), kind_(kind), index_(index) {}

  Kind kind() const noexcept { return kind_; }
  // Offending row, or -1 when the failure is not tied to a row.
  std::ptrdiff_t index() const noexcept { return index_; }

 private:
  Kind kind_;
  std::ptrdiff_t index_;
};

class EmptyEngagedSet : public Error {
 public:
  EmptyEngagedSet() : Error("motor factor of safety needs at least one engaged actuator") {}
};

// The nominal rollout itself is unsafe or fails the task.
class NominalUnsafe : public Error {
 public:
  NominalUnsafe(std::string what, long step) : Error(std::move(what)), step_(step) {}
  long step() const noexcept { return step_; }

 private:
  long step_;
};

}  // namespace psf
