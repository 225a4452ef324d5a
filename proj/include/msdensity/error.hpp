#pragma once

#include <stdexcept>
#include <string>

namespace msd {

// Base class for every error raised by the library. The CLI maps the
// subclasses onto exit codes: DivergenceError -> 3, everything else -> 2.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Invalid domain object (fractions not summing to one, bad temperature range...).
class ValidationError : public Error {
public:
    using Error::Error;
};

// Malformed input file. Carries the 1-based line number when known.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line = 0)
        : Error(line ? what + " (line " + std::to_string(line) + ")" : what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class DuplicateError : public ParseError {
public:
    using ParseError::ParseError;
};

class ConflictError : public ParseError {
public:
    using ParseError::ParseError;
};

class SchemaError : public Error {
public:
    using Error::Error;
};

class DataError : public Error {
public:
    using Error::Error;
};

class DegenerateCorrelationError : public Error {
public:
    using Error::Error;
};

class MissingCoefficientError : public Error {
public:
    using Error::Error;
};

class FeaturizationError : public Error {
public:
    using Error::Error;
};

class ShapeError : public Error {
public:
    using Error::Error;
};

// Artifacts built from different featurizations (or different provenance).
class IncompatibilityError : public Error {
public:
    using Error::Error;
};

class ConfigurationError : public Error {
public:
    using Error::Error;
};

class DomainError : public Error {
public:
    using Error::Error;
};

class MetricError : public Error {
public:
    using Error::Error;
};

// Non-finite loss during training.
class DivergenceError : public Error {
public:
    using Error::Error;
};

}  // namespace msd
