#pragma once

#include <stdexcept>
#include <string>

namespace zeckpell {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised by interval kernels when the enclosure is too wide to decide a
// branch; eval() catches it and retries at higher precision.
class PrecisionInsufficient : public Error {
 public:
  using Error::Error;
};

class PrecisionExhausted : public Error {
 public:
  using Error::Error;
};

class NonPositiveLogArgument : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

class PerfectSquare : public Error {
 public:
  using Error::Error;
};

class FactoringCeilingExceeded : public Error {
 public:
  using Error::Error;
};

class HypothesisViolation : public Error {
 public:
  using Error::Error;
};

class HypothesisFailed : public Error {
 public:
  using Error::Error;
};

class InsufficientExpansion : public Error {
 public:
  using Error::Error;
};

class NoUsableConvergent : public Error {
 public:
  using Error::Error;
};

class SingularBasis : public Error {
 public:
  using Error::Error;
};

}  // namespace zeckpell
