#pragma once

#include <stdexcept>
#include <string>

namespace ssmrecon {

/// Base of every error thrown by the library. The subclass decides the CLI
/// exit code (config 1, data 2, numerical 3).
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad configuration or command-line usage.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Malformed input files, I/O failures, topology or dimension mismatches.
class DataError : public Error {
public:
    using Error::Error;
};

/// Non-finite values, divergence, degenerate numerical configurations.
class NumericalError : public Error {
public:
    using Error::Error;
};

}  // namespace ssmrecon
