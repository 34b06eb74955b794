#pragma once

#include <stdexcept>
#include <string>

namespace aacp {

// Root of the project exception hierarchy. Every error surfaced to a caller
// derives from this so the CLI can map it to a stable exit code.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Misuse of an API contract (backward on a detached tensor, empty input, ...).
struct UsageError : Error {
    using Error::Error;
};

// Operating on an object whose required state is missing (uninitialized model).
struct StateError : UsageError {
    using UsageError::UsageError;
};

// Tensor/matrix extent mismatches.
struct ShapeError : Error {
    using Error::Error;
};

// Bad run configuration (unknown key, invalid value, missing path).
struct ConfigError : Error {
    using Error::Error;
};

// Out-of-range values in a validated specification.
struct ValidationError : ConfigError {
    using ConfigError::ConfigError;
};

// Problems with stored corpora, checkpoints or other on-disk artifacts.
struct DataError : Error {
    using Error::Error;
};

// Malformed file contents; the message names the offending record when known.
struct ParseError : DataError {
    using DataError::DataError;
};

// Numeric failures: non-finite inputs, domain violations, divergence.
struct NumericError : Error {
    using Error::Error;
};

struct ConvergenceError : NumericError {
    using NumericError::NumericError;
};

struct RankError : NumericError {
    using NumericError::NumericError;
};

struct DomainError : NumericError {
    using NumericError::NumericError;
};

// A metric that is mathematically undefined for the given sample
// (e.g. correlation of a constant sequence). Reported, never silently zero.
struct MetricUndefinedError : NumericError {
    using NumericError::NumericError;
};

}  // namespace aacp
