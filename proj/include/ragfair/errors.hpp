#pragma once

#include <stdexcept>
#include <string>

namespace ragfair {

// Base class for every error raised by the harness.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Precondition violation on a library call.
struct ArgumentError : Error {
    using Error::Error;
};

// Invalid configuration, lexicon, or input file. The CLI maps this to exit code 2.
struct ConfigError : Error {
    using Error::Error;
};

// Filesystem failure.
struct IoError : Error {
    using Error::Error;
};

// Network failure that survived every retry. Carries how many attempts were made.
struct TransportError : Error {
    TransportError(const std::string& what, int attempts_made)
        : Error(what), attempts(attempts_made) {}
    int attempts;
};

// The server answered but the payload violates the wire contract.
struct ProtocolError : Error {
    using Error::Error;
};

// A completion arrived but carried no text.
struct EmptyResponseError : ProtocolError {
    using ProtocolError::ProtocolError;
};

// Not enough data to compute a statistic (e.g. an empty no-flip group).
struct InsufficientDataError : Error {
    using Error::Error;
};

} // namespace ragfair
