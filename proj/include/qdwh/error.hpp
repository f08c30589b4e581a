#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace qdwh {

// Base for all library errors. The CLI maps subclasses to exit codes:
// usage/parse/shape problems exit 1, numeric divergence exits 2.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DimensionError : Error {
    using Error::Error;
};

struct RangeError : Error {
    using Error::Error;
};

// An item whose multi-hot label has no positive entry.
struct LabelError : Error {
    using Error::Error;
};

struct ArgumentError : Error {
    using Error::Error;
};

struct ParseError : Error {
    ParseError(const std::string& msg, std::size_t line = 0)
        : Error(line ? msg + " (line " + std::to_string(line) + ")" : msg), line_number(line) {}
    std::size_t line_number;
};

struct SamplingError : Error {
    using Error::Error;
};

struct NumericError : Error {
    using Error::Error;
};

struct DivergenceError : Error {
    DivergenceError(const std::string& msg, std::size_t step)
        : Error(msg + " at step " + std::to_string(step)), step(step) {}
    std::size_t step;
};

}  // namespace qdwh
