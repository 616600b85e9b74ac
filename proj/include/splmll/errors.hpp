#pragma once

#include <stdexcept>
#include <string>

namespace splmll {

// Every error raised by the library derives from Error so callers can map
// the concrete kind onto an exit status or a test expectation.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Invalid argument combination (k > n, top_k > C, dimension mismatch, ...).
class ArgumentError : public Error {
public:
    using Error::Error;
};

// Malformed text input. line() is 1-based, 0 when unknown.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line = 0)
        : Error(line ? what + " (line " + std::to_string(line) + ")" : what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

// Structurally valid input that does not match the expected schema.
class SchemaError : public Error {
public:
    using Error::Error;
};

// Values that parse but violate a semantic invariant.
class ValidationError : public Error {
public:
    using Error::Error;
};

// Non-finite inputs to a numeric routine.
class NumericError : public Error {
public:
    using Error::Error;
};

// Training produced a non-finite state.
class DivergenceError : public NumericError {
public:
    DivergenceError(const std::string& what, std::size_t iteration, std::string rate_name, double rate)
        : NumericError(what), iteration_(iteration), rate_name_(std::move(rate_name)), rate_(rate) {}
    std::size_t iteration() const noexcept { return iteration_; }
    const std::string& rate_name() const noexcept { return rate_name_; }
    double rate() const noexcept { return rate_; }

private:
    std::size_t iteration_;
    std::string rate_name_;
    double rate_;
};

// A metric whose every instance was excluded, or a conditional probability
// with an empty conditioning set.
class UndefinedMetricError : public Error {
public:
    using Error::Error;
};

// Filesystem failures (unreadable input, unwritable output).
class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace splmll
