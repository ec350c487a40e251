#pragma once

#include <stdexcept>
#include <string>

namespace svfar {

/// Base class for all library errors. `exit_code()` is what the CLI returns.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
    virtual int exit_code() const noexcept { return 2; }
};

/// Bad arguments, unknown options, violated preconditions on parameters.
class UsageError : public Error {
public:
    using Error::Error;
    int exit_code() const noexcept override { return 1; }
};

/// Shapes or grids that do not line up.
class DimensionError : public Error {
public:
    using Error::Error;
    int exit_code() const noexcept override { return 2; }
};

/// Malformed or inconsistent input data (files, panels).
class DataError : public Error {
public:
    using Error::Error;
    int exit_code() const noexcept override { return 2; }
};

/// Singular systems, divergence, non-finite values.
class NumericalError : public Error {
public:
    using Error::Error;
    int exit_code() const noexcept override { return 3; }
};

/// Transition matrix with spectral radius >= 1.
class NonStationaryError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

}  // namespace svfar
