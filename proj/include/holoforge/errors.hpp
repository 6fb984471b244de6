#pragma once

#include <stdexcept>
#include <string>

namespace holoforge {

/// Base class for every error raised by this library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A physical length or count that must be positive is not.
struct DimensionError : Error {
    using Error::Error;
};

/// An index (anchor, plane, subframe) is out of range.
struct IndexError : Error {
    using Error::Error;
};

/// Grid or tensor dimensions do not match the operation's contract.
struct ShapeError : Error {
    using Error::Error;
};

/// A value lies outside the mathematical domain of an operation.
struct DomainError : Error {
    using Error::Error;
};

/// backward() was requested for a tensor that is not on a tape.
struct GraphError : Error {
    using Error::Error;
};

/// A configuration file or flag set is invalid. CLI exit code 2.
struct ConfigError : Error {
    using Error::Error;
};

/// A file could not be read or written. CLI exit code 3.
struct IoError : Error {
    using Error::Error;
};

/// An optimization or training loss became non-finite. CLI exit code 4.
struct DivergenceError : Error {
    using Error::Error;
};

}  // namespace holoforge
