#pragma once

#include <stdexcept>
#include <string>

namespace glrp {

// Bad caller-supplied value (dimension, range, enum). CLI exit code 1.
struct ArgumentError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Input data violates an invariant (duplicates, overlaps, out-of-range rating).
struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed text input; carries the 1-based line number.
struct ParseError : std::runtime_error {
    ParseError(const std::string& what, long line)
        : std::runtime_error(what + " (line " + std::to_string(line) + ")"), line_number(line) {}
    long line_number;
};

// Filesystem problem. CLI exit code 2.
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Numerical breakdown; carries a reciprocal condition estimate when one is known.
struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& what, double rcond = -1.0)
        : std::runtime_error(rcond >= 0.0 ? what + " (rcond ~ " + std::to_string(rcond) + ")" : what),
          rcond_estimate(rcond) {}
    double rcond_estimate;
};

}  // namespace glrp
