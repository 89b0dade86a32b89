#pragma once

#include <stdexcept>
#include <string>

namespace xhate {

// Error taxonomy shared across the toolkit. The CLI maps these onto exit
// codes: UsageError -> 1, SchemaError/DataError -> 2, everything else -> 3.

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Input file does not have the declared shape (missing column/field).
struct SchemaError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Content-level problem in otherwise well-formed data.
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Invalid configuration (e.g. class weighting requested with an empty class).
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Non-finite values encountered where finite math is required.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A required external artifact (backbone adapter files) is unavailable.
struct CapabilityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A persisted cache no longer matches its configuration fingerprint.
struct StaleCacheError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace xhate
