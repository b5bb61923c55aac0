#pragma once

#include <stdexcept>
#include <string>

namespace levtof {

// Invalid physical parameters are reported with std::invalid_argument.
// The types below cover the remaining failure classes; the CLI maps each
// family onto a distinct exit code.

class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what, int line = -1)
        : std::runtime_error(what), line_(line) {}
    int line() const noexcept { return line_; }

private:
    int line_;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Base for everything a numerical routine can fail with.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class NoRootError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class QuadratureError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class FitError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

// Sample sets that cannot be summarised (too few points, zero spread).
class DegenerateDataError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

// A width below the quantum limit, which no occupation number can produce.
class InvalidMeasurement : public NumericalError {
public:
    using NumericalError::NumericalError;
};

}  // namespace levtof
