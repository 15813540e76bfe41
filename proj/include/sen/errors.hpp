#pragma once

#include <stdexcept>
#include <string>

namespace sen {

// Base for everything thrown by this library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Shape disagreement between tensors; message names the offending axis.
struct DimensionError : Error {
  using Error::Error;
};

// Invalid or inconsistent configuration values.
struct ConfigError : Error {
  using Error::Error;
};

// Unusable input data: parse failures, segmentation preconditions,
// unsatisfiable sampling, missing classes.
struct DataError : Error {
  using Error::Error;
};

// Non-finite values, degenerate (zero-norm) embeddings, zero variance.
struct NumericError : Error {
  using Error::Error;
};

// API misuse: non-scalar loss, consumed tape, mismatched lengths.
struct ContractError : Error {
  using Error::Error;
};

}  // namespace sen
