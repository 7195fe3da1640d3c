#pragma once

#include <stdexcept>
#include <string>

namespace cavshift {

// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Argument outside the mathematical domain of an operation (z = 0 for Y_n, x = y for kernels).
class DomainError : public Error {
public:
    using Error::Error;
};

// Result would overflow double range.
class OverflowError : public Error {
public:
    using Error::Error;
};

class ConvergenceError : public Error {
public:
    using Error::Error;
};

// Invalid shape, quadrature or material parameters.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

// Continuation jumped branch or overlap test failed.
class BranchError : public Error {
public:
    using Error::Error;
};

// Spectral data degenerates (candidate exceptional point).
class ExceptionalPointError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    ConfigError(const std::string& what, int line = 0)
        : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
    int line() const { return line_; }

private:
    int line_;
};

}  // namespace cavshift
