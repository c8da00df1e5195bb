#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace vms {

// Base class for every error the library raises on bad input or failed
// computation. Programming errors still surface as std::logic_error.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct FieldError {
  std::string field;
  std::string message;
};

// Input failed validation. Carries one entry per offending field so that
// callers (CLI, HTTP service) can report every problem at once.
class ValidationError : public Error {
 public:
  explicit ValidationError(std::string message);
  explicit ValidationError(std::vector<FieldError> errors);

  const std::vector<FieldError>& errors() const noexcept { return errors_; }

 private:
  std::vector<FieldError> errors_;
};

// Corrupt or unreadable binary/text file.
class FormatError : public Error {
 public:
  using Error::Error;
};

// A statistic is undefined for the given input (constant map, all ties, ...).
class DegenerateInputError : public Error {
 public:
  using Error::Error;
};

// No participant contributed a selection for the requested VMS.
class EmptyVmsError : public Error {
 public:
  using Error::Error;
};

// Iterative training produced non-finite values.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace vms
