#pragma once

#include <stdexcept>
#include <string>

namespace hod {

// Base class for everything this library throws on purpose. The CLI maps the
// subclasses onto distinct exit codes, so pick the most specific one.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Mismatched vector/matrix dimensions between caller and callee.
class DimensionError : public Error {
public:
    using Error::Error;
};

// Invalid configuration value (negative batch size, tau <= 0, unknown key).
class ConfigError : public Error {
public:
    using Error::Error;
};

// Unreadable, truncated or malformed input file.
class DataError : public Error {
public:
    using Error::Error;
};

// Non-finite intermediate value or a numerically degenerate input.
class NumericError : public Error {
public:
    using Error::Error;
};

// Batch does not satisfy the preconditions of the contrastive loss,
// for example an anchor without any positive.
class InvalidBatchError : public Error {
public:
    using Error::Error;
};

} // namespace hod
