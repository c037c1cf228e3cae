#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace stdpp {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of a function (x <= 0, NaN, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

/// Model or configuration parameters violate their invariants.
class InvalidParameter : public Error {
public:
    using Error::Error;
};

/// The requested operation is not available for this model family.
class Unsupported : public Error {
public:
    using Error::Error;
};

class SizeLimitError : public Error {
public:
    using Error::Error;
};

/// Numeric spectral inversion could not reach the requested tolerance.
class GridTooCoarse : public Error {
public:
    GridTooCoarse(const std::string& what, double estimate)
        : Error(what), error_estimate(estimate) {}
    double error_estimate;
};

/// Spectral cutoff discards more mass than allowed.
class TruncationError : public Error {
public:
    TruncationError(const std::string& what, double fraction)
        : Error(what), discarded_fraction(fraction) {}
    double discarded_fraction;
};

class RejectionBudgetExceeded : public Error {
public:
    using Error::Error;
};

class InfeasibleBounds : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line_no)
        : Error(what), line(line_no) {}
    std::size_t line;
};

}  // namespace stdpp
