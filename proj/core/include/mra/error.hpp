#pragma once

#include <stdexcept>
#include <string>

namespace mra {

// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class LengthMismatch : public Error {
 public:
  LengthMismatch(std::size_t a, std::size_t b)
      : Error("length mismatch: " + std::to_string(a) + " vs " + std::to_string(b)) {}
};

// Raised when an input exceeds a cost guard (brute-force third moment, exact search).
class SizeGuardError : public Error {
 public:
  using Error::Error;
};

// Raised when a bounded search or sampler runs out of budget.
class BudgetExceeded : public Error {
 public:
  using Error::Error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace mra
