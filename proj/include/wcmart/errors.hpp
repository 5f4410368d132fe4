#pragma once

#include <stdexcept>
#include <string>

namespace wcmart {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Operands of incompatible shape (ambient dimensions, m, ell).
class DimensionError : public Error {
public:
    using Error::Error;
};

/// Input data violates a type invariant (column sums, independence, ranges).
class ValidationError : public Error {
public:
    using Error::Error;
};

/// An operation was called outside its precondition.
class PreconditionError : public Error {
public:
    using Error::Error;
};

/// A postcondition that should hold by construction failed. Always a bug.
class InvariantError : public Error {
public:
    using Error::Error;
};

}  // namespace wcmart
