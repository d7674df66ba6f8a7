#pragma once

#include <stdexcept>
#include <string>

namespace ceitr {

// Censoring calibration did not reach the requested rate.
class CalibrationFailure : public std::runtime_error {
 public:
  explicit CalibrationFailure(const std::string& what)
      : std::runtime_error(what) {}
};

// A likelihood or IRLS fit failed to converge.
class FitFailure : public std::runtime_error {
 public:
  explicit FitFailure(const std::string& what) : std::runtime_error(what) {}
};

// A censoring weight evaluated to zero where a positive value is required.
class DegenerateWeight : public std::runtime_error {
 public:
  explicit DegenerateWeight(const std::string& what)
      : std::runtime_error(what) {}
};

// An operation was called before its required fitted inputs were available.
class InvalidState : public std::logic_error {
 public:
  explicit InvalidState(const std::string& what) : std::logic_error(what) {}
};

}  // namespace ceitr
