#pragma once

#include <stdexcept>
#include <string>

namespace clreg {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad shapes, out-of-range arguments, malformed files or configs.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Input is well-formed but numerically degenerate (e.g. zero-norm vector).
class DegenerateInputError : public Error {
 public:
  using Error::Error;
};

// A computation produced a non-finite value. `term()` names the culprit.
class NumericError : public Error {
 public:
  NumericError(std::string term, const std::string& what)
      : Error(what), term_(std::move(term)) {}

  const std::string& term() const { return term_; }

 private:
  std::string term_;
};

// A configuration that cannot be satisfied (e.g. entanglement threshold never met).
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace clreg
