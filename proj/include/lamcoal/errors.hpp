#pragma once
#include <stdexcept>
#include <string>

namespace lamcoal {

// Bad user-supplied value (rates, sample sizes, scheme names).
struct ArgumentError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Malformed or inconsistent genetree input; line is 1-based, 0 if unknown.
struct ParseError : std::runtime_error {
  int line;
  ParseError(const std::string& msg, int line_ = 0)
      : std::runtime_error(line_ > 0 ? "line " + std::to_string(line_) + ": " + msg : msg),
        line(line_) {}
};

// Computation would exceed a configured size or complexity limit.
struct ResourceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Non-finite or degenerate numeric result.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Scheme requested without the data it needs (e.g. missing tables).
struct ConfigurationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace lamcoal
