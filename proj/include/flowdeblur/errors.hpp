// Error types shared across the library.
#ifndef FLOWDEBLUR_ERRORS_HPP
#define FLOWDEBLUR_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace flowdeblur {

// Dimension / channel mismatch between operands.
struct ShapeError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Invalid argument value (out of domain, bad configuration).
struct ParameterError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Filesystem or stream failure.
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed file or wire content (bad magic, truncated payload).
struct FormatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Non-finite values or a diverging iteration.
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace flowdeblur

#endif
