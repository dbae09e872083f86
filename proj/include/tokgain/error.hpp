#pragma once

#include <stdexcept>

namespace tokgain {

// Problems in user-supplied inputs: files, flags, parameter ranges.
struct input_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Broken internal invariants; reaching one of these is a bug.
struct invariant_error : std::logic_error {
    using std::logic_error::logic_error;
};

} // namespace tokgain
