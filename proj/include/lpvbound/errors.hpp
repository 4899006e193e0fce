#pragma once

#include <stdexcept>
#include <string>

namespace lpv {

// Scheduling value outside the box, or a grid evaluation off its node range.
class DomainError : public std::out_of_range {
 public:
  explicit DomainError(const std::string& what) : std::out_of_range(what) {}
};

class DimensionError : public std::invalid_argument {
 public:
  explicit DimensionError(const std::string& what)
      : std::invalid_argument(what) {}
};

// Rank deficiency: non-minimal frozen model, singular Gram matrix, Hankel
// rank below the requested order.
class NonMinimalError : public std::runtime_error {
 public:
  explicit NonMinimalError(const std::string& what)
      : std::runtime_error(what) {}
};

// Two frozen models that do not share a transfer function.
class NonEquivalentError : public std::runtime_error {
 public:
  explicit NonEquivalentError(const std::string& what)
      : std::runtime_error(what) {}
};

class StabilityError : public std::runtime_error {
 public:
  explicit StabilityError(const std::string& what)
      : std::runtime_error(what) {}
};

// Hankel rank differs from the requested realization order.
class ModelOrderError : public std::runtime_error {
 public:
  explicit ModelOrderError(const std::string& what)
      : std::runtime_error(what) {}
};

// Scheduling signal is not piecewise constant with the requested dwell.
class SignalClassError : public std::invalid_argument {
 public:
  explicit SignalClassError(const std::string& what)
      : std::invalid_argument(what) {}
};

// Unreadable or malformed model, signal or config file.
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace lpv
