#pragma once

#include <stdexcept>
#include <string>

namespace dyad {

// Every failure surfaced by the library derives from Error so callers can
// catch one type; the subclasses carry the failure category.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed or inconsistent data (shapes, non-finite values, asymmetry).
class InvalidInput : public Error {
public:
    using Error::Error;
};

// A scalar parameter is outside its domain (non-positive lambda, empty grid).
class InvalidParameter : public Error {
public:
    using Error::Error;
};

// Singular filters, zero hat-matrix diagonals, non-finite intermediate results.
class NumericalError : public Error {
public:
    using Error::Error;
};

// A dense materialization would exceed the configured size cap.
class CapacityError : public Error {
public:
    using Error::Error;
};

// A metric is undefined for the supplied labels (e.g. all labels tied).
class UndefinedMetric : public Error {
public:
    using Error::Error;
};

// An experiment plan cannot be executed against the supplied data.
class InvalidPlan : public Error {
public:
    using Error::Error;
};

class ParseError : public InvalidInput {
public:
    ParseError(const std::string& source, std::size_t line, std::size_t column, const std::string& what)
        : InvalidInput(source + ":" + std::to_string(line) + ":" + std::to_string(column) + ": " + what),
          line_(line), column_(column) {}

    [[nodiscard]] std::size_t line() const noexcept { return line_; }
    [[nodiscard]] std::size_t column() const noexcept { return column_; }

private:
    std::size_t line_;
    std::size_t column_;
};

} // namespace dyad
