#pragma once

#include <stdexcept>
#include <string>

namespace stto {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Sizes, ranks or lengths that do not agree with each other.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// Index outside the valid range of a shape.
class BoundsError : public Error {
public:
    using Error::Error;
};

/// Argument outside its documented domain.
class ArgumentError : public Error {
public:
    using Error::Error;
};

/// Requested object too large to materialize.
class CapacityError : public Error {
public:
    using Error::Error;
};

/// Malformed or unreadable file content.
class FormatError : public Error {
public:
    using Error::Error;
};

/// File could not be opened, read or written.
class IoError : public Error {
public:
    using Error::Error;
};

/// NaN or infinity produced during a numeric computation.
class NumericError : public Error {
public:
    using Error::Error;
};

}  // namespace stto
