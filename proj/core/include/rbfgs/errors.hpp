#pragma once

#include <stdexcept>
#include <string>

namespace rbfgs {

// Root of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
public:
    using Error::Error;
};

// Symmetric factorization or eigendecomposition rejected the input.
class NotPositiveDefinite : public Error {
public:
    using Error::Error;
};

// Point lies outside the objective's domain (log-barrier slack <= 0).
class DomainError : public Error {
public:
    using Error::Error;
};

// S^T H S was singular or indefinite; the caller should redraw S.
class RejectedSketch : public Error {
public:
    using Error::Error;
};

class LineSearchFailure : public Error {
public:
    using Error::Error;
};

class ReferenceFailure : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line, std::size_t column)
        : Error("line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + what),
          line_(line),
          column_(column) {}

    std::size_t line() const noexcept { return line_; }
    std::size_t column() const noexcept { return column_; }

private:
    std::size_t line_;
    std::size_t column_;
};

}  // namespace rbfgs
