#pragma once

#include <stdexcept>
#include <string>

namespace vibrancy {

// Base for all library errors so callers can catch one type at the CLI edge.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed content inside an input file (carries file/line context in the message).
class ParseError : public Error {
public:
    using Error::Error;
};

// Inputs violate a documented precondition (bad shapes, unknown categories, ...).
class InvalidInput : public Error {
public:
    using Error::Error;
};

}  // namespace vibrancy
