#pragma once

#include <stdexcept>
#include <string>

namespace stericpb {

/// Invalid or inconsistent run configuration (bad key, violated constraint).
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Malformed input file content; carries a line number where applicable.
struct ParseError : ConfigError {
    ParseError(const std::string& msg, long line)
        : ConfigError(msg + " (line " + std::to_string(line) + ")"), line_number(line) {}
    long line_number;
};

/// An iteration failed to converge or produced non-finite values.
struct NumericalError : std::runtime_error {
    explicit NumericalError(const std::string& msg, double residual = 0.0)
        : std::runtime_error(msg), last_residual(residual) {}
    double last_residual;
};

/// Filesystem-level failure (unreadable/unwritable path).
struct IoError : std::runtime_error {
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace stericpb
