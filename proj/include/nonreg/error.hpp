#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace nonreg {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid user input: bad arguments, malformed configuration, out-of-range labels.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Malformed CSV row. `row()` is the 1-based data row (header excluded).
class ParseError : public ValidationError {
public:
    ParseError(std::size_t row, const std::string& what)
        : ValidationError("row " + std::to_string(row) + ": " + what), row_(row) {}
    std::size_t row() const noexcept { return row_; }

private:
    std::size_t row_;
};

/// A fit could not be computed (singular or ill-conditioned design, nonconvergence).
class EstimationError : public Error {
public:
    explicit EstimationError(const std::string& what, double condition_number = 0.0)
        : Error(what), condition_number_(condition_number) {}
    double condition_number() const noexcept { return condition_number_; }

private:
    double condition_number_;
};

/// The data violate a working assumption, e.g. x'Σx bounded away from zero.
class AssumptionError : public Error {
public:
    using Error::Error;
};

}  // namespace nonreg
