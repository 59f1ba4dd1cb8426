#pragma once

#include <stdexcept>
#include <string>

namespace cat {

/// Dimension mismatch in a tensor operation.
struct ShapeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Argument outside its valid range (labels, rates, batch indices, ...).
struct InputError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Operation requires state that is not present (missing grad, unsaved mask,
/// untrained task).
struct StateError : std::logic_error {
  using std::logic_error::logic_error;
};

/// Unknown task id or similar failed lookup.
struct LookupError : std::out_of_range {
  using std::out_of_range::out_of_range;
};

/// Malformed external file (IDX, bundle, checkpoint).
struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Invalid experiment configuration.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Data-level problem that is not a byte-format error (missing file,
/// image/label count mismatch, insufficient samples).
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace cat
