// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace comdml {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// No usable communication link between two agents.
struct MissingLink : Error {
    using Error::Error;
};

// A PairingPlan violates its structural invariants.
struct InvalidPlan : Error {
    using Error::Error;
};

struct InvalidModel : Error {
    using Error::Error;
};

struct OutOfRange : Error {
    using Error::Error;
};

struct NoSplits : Error {
    using Error::Error;
};

// Instance too big for exhaustive enumeration.
struct TooLarge : Error {
    using Error::Error;
};

// Collective cost model needs at least two participants.
struct BadK : Error {
    using Error::Error;
};

struct UnknownBaseline : Error {
    using Error::Error;
};

struct ShapeMismatch : Error {
    using Error::Error;
};

struct EmptySample : Error {
    using Error::Error;
};

// Configuration problems map to CLI exit code 2; everything else to 3.
struct ConfigError : Error {
    using Error::Error;
};

struct ParseError : ConfigError {
    using ConfigError::ConfigError;
};

struct ValidationError : ConfigError {
    using ConfigError::ConfigError;
};

} // namespace comdml
