#pragma once

#include <stdexcept>
#include <string>

namespace flock {

// Raised when a time step would leave the stable regime (alpha*dt > 1 for
// explicit Euler, CFL violation on the Eulerian grid).
class StabilityError : public std::runtime_error {
  public:
    explicit StabilityError(const std::string &what) : std::runtime_error(what) {}
};

// Raised when a step produces a non-finite state.
class NumericError : public std::runtime_error {
  public:
    explicit NumericError(const std::string &what) : std::runtime_error(what) {}
};

} // namespace flock
