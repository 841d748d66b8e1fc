#pragma once

#include <stdexcept>
#include <string>

namespace krsml {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Shape mismatch, out-of-range parameter or otherwise malformed call.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// Not enough examples left to answer the request (e.g. n < 2 for leave-one-out).
class InsufficientData : public Error {
public:
    using Error::Error;
};

/// Data whose structure makes the request meaningless (zero variance, all-zero targets).
class DegenerateData : public Error {
public:
    using Error::Error;
};

/// Unreadable or malformed input file.
class DataError : public Error {
public:
    using Error::Error;
};

/// Non-finite values or a failed decomposition.
class NumericError : public Error {
public:
    using Error::Error;
};

} // namespace krsml
