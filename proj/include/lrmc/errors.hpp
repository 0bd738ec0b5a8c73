#pragma once

#include <stdexcept>
#include <string>

namespace lrmc {

/// Raised when an input violates a documented invariant or precondition.
/// The message names the violated invariant.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Raised when a file cannot be parsed.
class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace lrmc
