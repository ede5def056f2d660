#pragma once

#include <stdexcept>
#include <string>

namespace sums {

// Bad user input: malformed files, out-of-range states, invalid config.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// A numerical routine failed to produce a usable result (non-convergence,
// underflow of every Monte Carlo weight, loss of positive definiteness).
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace sums
