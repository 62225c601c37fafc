#pragma once

#include <stdexcept>
#include <string>

namespace cbid {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed, inconsistent or insufficient input data.
class DataError : public Error {
public:
    using Error::Error;
};

/// Sizes or dimensions of two arguments disagree.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// Argument outside the domain of a function (e.g. a conjugate evaluated off its support).
class DomainError : public Error {
public:
    using Error::Error;
};

/// Invalid training or run configuration value.
class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace cbid
