#pragma once

#include <stdexcept>
#include <string>

namespace pathmc {

// Violated precondition or malformed argument (bad dimension, empty grid, ...).
struct InputError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Requested exterior-ball radius exceeds what the domain kind can support.
struct UnsupportedDeltaError : InputError {
    using InputError::InputError;
};

// An iterative numeric routine failed to reach its tolerance (projection sweep
// cap, quadrature subdivision cap, inverse-CDF table construction, ...).
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Configuration file problems; message names the offending field.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace pathmc
