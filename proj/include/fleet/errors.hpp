#pragma once

#include <stdexcept>
#include <string>

namespace fleet {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A barrier was evaluated at or beyond its constraint boundary (c <= 0).
class ConstraintViolated : public Error {
public:
    using Error::Error;
};

/// Front-wheel angle reached the tan(gamma) singularity guard.
class SteeringSingularity : public Error {
public:
    using Error::Error;
};

/// Scenario text could not be parsed. `where` names the offending location.
class ParseError : public Error {
public:
    ParseError(std::string where, const std::string& message)
        : Error(where + ": " + message), where_(std::move(where)) {}

    const std::string& where() const noexcept { return where_; }

private:
    std::string where_;
};

/// A scenario parsed but violates a named invariant.
class ValidationError : public Error {
public:
    ValidationError(std::string invariant, const std::string& detail)
        : Error(invariant + ": " + detail), invariant_(std::move(invariant)) {}

    const std::string& invariant() const noexcept { return invariant_; }

private:
    std::string invariant_;
};

}  // namespace fleet
