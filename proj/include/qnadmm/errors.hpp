#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace qnadmm {

// Base for every error the library raises.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class NotPositiveDefinite : public Error {
 public:
  NotPositiveDefinite(std::size_t pivot, double value)
      : Error("not positive definite: pivot " + std::to_string(pivot) +
              " has value " + std::to_string(value)),
        pivot_(pivot),
        value_(value) {}

  std::size_t pivot() const noexcept { return pivot_; }
  double value() const noexcept { return value_; }

 private:
  std::size_t pivot_;
  double value_;
};

class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double last_estimate)
      : Error(what), last_estimate_(last_estimate) {}

  double last_estimate() const noexcept { return last_estimate_; }

 private:
  double last_estimate_;
};

// Raised when a quasi-Newton pair has (numerically) non-positive curvature.
class CurvatureBreakdown : public Error {
 public:
  using Error::Error;
};

// A quasi-Newton matrix lost positive definiteness (s^T B s <= 0).
class MetricNotPositiveDefinite : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace qnadmm
