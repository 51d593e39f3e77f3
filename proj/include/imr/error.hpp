#pragma once

#include <stdexcept>
#include <string>

namespace imr {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Operand shapes (order, dims, rank) do not agree.
class DimensionMismatch : public Error {
public:
    using Error::Error;
};

/// A configured size guard was exceeded (dense oracles, solves, densification).
class GuardExceeded : public Error {
public:
    using Error::Error;
};

/// Factorization failure, divergence or non-finite values.
class NumericalFailure : public Error {
public:
    using Error::Error;
};

/// Invalid parameters or configuration values.
class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace imr
