#pragma once

#include <stdexcept>
#include <string>

namespace relatt {

// Base class for every error the toolkit raises on purpose.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed input file (carries file/line context in the message).
struct ParseError : Error {
    using Error::Error;
};

// Filesystem-level failure: missing file, unwritable path.
struct IoError : Error {
    using Error::Error;
};

// Invalid configuration value or key.
struct ConfigError : Error {
    using Error::Error;
};

// A caller violated an operation's contract (shape mismatch, empty batch).
struct ContractError : Error {
    using Error::Error;
};

// Non-finite value produced by a numeric operation; names the operation.
struct NumericError : Error {
    using Error::Error;
};

// Feature file does not cover every entity of the graph.
struct CoverageError : Error {
    using Error::Error;
};

// Unknown entity or relation id.
struct VocabError : Error {
    using Error::Error;
};

// Negative sampling cannot proceed (fewer than two entities).
struct SamplingError : Error {
    using Error::Error;
};

// Model is not usable in the requested mode (e.g. not inductive).
struct ModeError : Error {
    using Error::Error;
};

// Zero-norm vector handed to a similarity computation.
struct SimilarityError : Error {
    using Error::Error;
};

// Training diverged; carries the epoch at which it happened.
struct TrainingError : Error {
    int epoch;
    TrainingError(const std::string& msg, int epoch_) : Error(msg), epoch(epoch_) {}
};

}  // namespace relatt
