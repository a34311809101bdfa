#pragma once

#include <stdexcept>
#include <string>

namespace unmix {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidIndex : public Error {
public:
    using Error::Error;
};

class DuplicateIndex : public Error {
public:
    using Error::Error;
};

class FormatError : public Error {
public:
    using Error::Error;
};

class InvalidParameter : public Error {
public:
    using Error::Error;
};

class InvalidInput : public Error {
public:
    using Error::Error;
};

class DimensionError : public Error {
public:
    using Error::Error;
};

/// A factorization or eigendecomposition failed even after ridge regularization.
class NumericalError : public Error {
public:
    using Error::Error;
};

} // namespace unmix
