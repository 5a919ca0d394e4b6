#pragma once

#include <stdexcept>
#include <string>

namespace occlusion {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed header, bad magic, unparsable text.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Payload shorter or longer than its header promises.
class LengthError : public Error {
 public:
  using Error::Error;
};

/// Content parsed but violates a data invariant (simplex, dims).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Caller-supplied parameter outside its admissible range.
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// Feature vector width does not match the model schema.
class SchemaError : public Error {
 public:
  using Error::Error;
};

/// Forest training cannot proceed (e.g. single-class labels).
class TrainingError : public Error {
 public:
  using Error::Error;
};

/// A pipeline stage input does not exist on disk.
class MissingArtifact : public Error {
 public:
  using Error::Error;
};

/// Non-finite values or a numerical breakdown.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace occlusion
