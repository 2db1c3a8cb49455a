#pragma once

#include <stdexcept>
#include <string>

namespace ctxmatch {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Shapes that do not fit together.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// API misuse: non-scalar loss, missing domain, backward on an inference graph.
class UsageError : public Error {
 public:
  using Error::Error;
};

// NaN / Inf in values or gradients.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Malformed input files (dataset TSV, vocab, bank, config, checkpoint).
class FormatError : public Error {
 public:
  using Error::Error;
};

// Inconsistent or invalid hyperparameters.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Checkpoint-specific failures, each a distinct class.
class CheckpointVersionError : public FormatError {
 public:
  using FormatError::FormatError;
};

class CheckpointShapeError : public FormatError {
 public:
  using FormatError::FormatError;
};

class CheckpointKindError : public FormatError {
 public:
  using FormatError::FormatError;
};

class CheckpointTruncatedError : public FormatError {
 public:
  using FormatError::FormatError;
};

}  // namespace ctxmatch
