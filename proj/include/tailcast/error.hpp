// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace tailcast {

// Exception hierarchy. The CLI maps the three branches onto its exit codes:
// InputError -> 2, DataError -> 3, NumericalError -> 4.

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or out-of-domain arguments supplied by the caller.
class InputError : public Error {
 public:
  using Error::Error;
};

/// Distribution parameters outside their valid domain (e.g. scale <= 0).
class ParameterError : public InputError {
 public:
  using InputError::InputError;
};

/// A single unparseable input row. Carries the 1-based line number.
class RowError : public InputError {
 public:
  RowError(std::size_t line, const std::string& what)
      : InputError("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Input that parsed to zero events.
class EmptySeriesError : public InputError {
 public:
  using InputError::InputError;
};

/// A rescale plan that does not cover every week of the series it is applied to.
class CoverageError : public InputError {
 public:
  using InputError::InputError;
};

/// Well-formed input that cannot support the requested analysis.
class DataError : public Error {
 public:
  using Error::Error;
};

class InsufficientDataError : public DataError {
 public:
  using DataError::DataError;
};

/// Zero variance, all-zero counts and similar inputs for which a statistic is undefined.
class DegenerateInputError : public DataError {
 public:
  using DataError::DataError;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace tailcast
