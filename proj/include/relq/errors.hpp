#pragma once

#include <stdexcept>
#include <string>

namespace relq {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// An event name failed to resolve against the event table.
class NameError : public Error {
public:
    explicit NameError(const std::string& msg) : Error(msg) {}
};

/// A value violated a domain invariant (range, sign, sum-to-one, ...).
class DomainError : public Error {
public:
    explicit DomainError(const std::string& msg) : Error(msg) {}
};

/// Vector/matrix dimensions do not match.
class DimensionError : public Error {
public:
    explicit DimensionError(const std::string& msg) : Error(msg) {}
};

/// A numerical routine failed to converge (iteration cap, degenerate pivot, ...).
class NumericError : public Error {
public:
    explicit NumericError(const std::string& msg) : Error(msg) {}
};

/// A search with bilinear constraints found no feasible point.  This is not a
/// proof of infeasibility; it means the solver cannot tell.
class UnknownFeasibilityError : public Error {
public:
    explicit UnknownFeasibilityError(const std::string& msg) : Error(msg) {}
};

/// Syntax or semantic error in a constraint program, with 1-based position.
class ParseError : public Error {
public:
    ParseError(int line, int col, const std::string& msg, std::string token = {})
        : Error("parse error at " + std::to_string(line) + ":" + std::to_string(col) +
                ": " + msg),
          line(line), col(col), token(std::move(token)), message(msg) {}

    int line;
    int col;
    std::string token;
    std::string message;
};

} // namespace relq
