#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace hypekit {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Vector or matrix shapes disagree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Model or training configuration violates an invariant.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// A fact's arity does not fit the relation or the model.
class ArityError : public Error {
 public:
  using Error::Error;
};

// A 1-indexed tuple position is outside [1, max arity].
class PositionError : public Error {
 public:
  using Error::Error;
};

// Malformed dataset text; carries the 1-based line number (0 when unknown).
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(line == 0 ? what : "line " + std::to_string(line) + ": " + what),
        line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// A relation was seen with two different arities.
class ArityConflictError : public ParseError {
 public:
  using ParseError::ParseError;
};

// Dataset-level invariant violated (overlapping splits, unknown ids, ...).
class DataError : public Error {
 public:
  using Error::Error;
};

// A reified triple group cannot be turned back into one fact.
class MalformedGroupError : public Error {
 public:
  using Error::Error;
};

// Training diverged or was given unusable inputs.
class TrainingError : public Error {
 public:
  using Error::Error;
};

// Evaluation was asked to report on nothing.
class EmptyReportError : public Error {
 public:
  using Error::Error;
};

// Checkpoint file is malformed or does not match the dataset.
class CheckpointError : public Error {
 public:
  using Error::Error;
};

}  // namespace hypekit
