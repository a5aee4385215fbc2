#pragma once

#include <stdexcept>
#include <string>

namespace logsem {

// Error taxonomy used across the library.  Every failure mode raised on
// purpose derives from Error so callers can catch the whole family.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad user-supplied configuration (ranges, missing keys, inconsistent dims).
struct ConfigError : Error {
    using Error::Error;
};

// Malformed external data: log lines, container files, JSON artifacts.
struct FormatError : Error {
    using Error::Error;
};

// A required artifact or input file is missing.
struct MissingArtifactError : Error {
    using Error::Error;
};

// Numerical failure at runtime (divergence, undefined statistic, ...).
struct NumericError : Error {
    using Error::Error;
};

// Violation of an internal precondition (dimension mismatch between two
// otherwise valid objects, lookup of an unknown name, ...).
struct ContractError : Error {
    using Error::Error;
};

}  // namespace logsem
