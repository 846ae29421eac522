#pragma once

#include <stdexcept>
#include <string>

namespace sentrav {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Dimension or length disagreement between operands.
struct ShapeError : Error {
    using Error::Error;
};

// Out-of-range index (token id, class id, element access).
struct IndexError : Error {
    using Error::Error;
};

// Semantically invalid input (empty sample set, bad flag value, ...).
struct InputError : Error {
    using Error::Error;
};

// API misuse (stale context, mismatched call sequence).
struct UsageError : Error {
    using Error::Error;
};

struct IoError : Error {
    using Error::Error;
};

// Malformed or truncated file contents.
struct FormatError : Error {
    using Error::Error;
};

} // namespace sentrav
