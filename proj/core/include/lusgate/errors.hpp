#pragma once

#include <stdexcept>
#include <string>

namespace lusgate {

// Invalid network description: broken shape chain, bad layer arguments.
struct SpecError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Non-finite values produced during forward/backward or training divergence.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// File, manifest and serialization problems.
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Precondition violations on operation arguments.
struct InvalidArgument : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace lusgate
