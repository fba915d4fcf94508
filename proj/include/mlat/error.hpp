#pragma once

#include <stdexcept>
#include <string>

namespace mlat {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Input data or a request failed a domain invariant (range, enum, shape).
/// The CLI maps these to exit status 2.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// A file or document does not have the expected structure (missing column,
/// unknown key, malformed JSON).
class SchemaError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

} // namespace mlat
