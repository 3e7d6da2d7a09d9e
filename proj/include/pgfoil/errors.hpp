#pragma once

#include <stdexcept>
#include <string>

namespace pgfoil {

/// Base class for all structured errors raised by the library.
struct Error : std::runtime_error {
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Shape/dimension mismatch in a tensor operation; message names the op and both shapes.
struct ShapeError : Error {
    using Error::Error;
};

/// NaN produced where finite values are required (gradients, losses).
struct NumericError : Error {
    using Error::Error;
};

/// Invalid argument to a geometry / dataset / training operation.
struct DomainError : Error {
    using Error::Error;
};

/// File format or serialization failure (bad magic, version, truncation).
struct FormatError : Error {
    using Error::Error;
};

/// Training-loop abort (divergence, NaN gradients) after best-effort checkpoint.
struct TrainingError : Error {
    using Error::Error;
};

}  // namespace pgfoil
