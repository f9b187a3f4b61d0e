#pragma once

#include <stdexcept>
#include <string>

namespace qnpg {

// Thrown when an enumeration or other budget-guarded operation would exceed
// its configured resource cap.
class ResourceError : public std::runtime_error {
 public:
  explicit ResourceError(const std::string& what) : std::runtime_error(what) {}
};

// Thrown when an optimizer iterate leaves the finite range; signals a
// mis-configured step size rather than a recoverable condition.
class NumericalDivergence : public std::runtime_error {
 public:
  NumericalDivergence(const std::string& what, int inner_step)
      : std::runtime_error(what), inner_step_(inner_step) {}
  int inner_step() const noexcept { return inner_step_; }

 private:
  int inner_step_;
};

class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace qnpg
