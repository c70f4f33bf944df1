#pragma once

#include <stdexcept>
#include <string>

namespace sturmian {

// Input violates an operation's precondition. Maps to CLI exit code 2.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// A continued-fraction coefficient beyond the available data was requested.
class CoefficientUndefined : public ValidationError {
public:
    explicit CoefficientUndefined(std::size_t k)
        : ValidationError("coefficient-undefined: a_" + std::to_string(k) +
                          " is beyond the explicit prefix"),
          index_(k) {}
    std::size_t index() const noexcept { return index_; }

private:
    std::size_t index_;
};

// Numerical failure (root isolation, precision, divergence). Maps to exit code 3.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace sturmian
