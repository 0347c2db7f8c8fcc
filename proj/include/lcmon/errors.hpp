#pragma once

#include <stdexcept>

namespace lcmon {

// Argument violates an operation's contract.
struct InvalidArgument : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Input is well-formed but too short for the requested computation.
struct InsufficientData : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Model and input disagree on catalog version or feature layout.
struct IncompatibleInput : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Training target admits no model (e.g. single-class labels).
struct DegenerateTarget : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Filesystem or parse failure.
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace lcmon
