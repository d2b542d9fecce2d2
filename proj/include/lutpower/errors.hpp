#pragma once

#include <stdexcept>
#include <string>

namespace lutpower {

// Every recoverable failure in the toolkit carries a kind so callers (and the
// CLI exit-code mapping) can distinguish user/data errors from internal ones.
enum class ErrorKind {
    Io,                // file missing, unreadable, unwritable
    Parse,             // malformed CSV/JSON content
    Validation,        // a domain invariant is violated (row-tagged where possible)
    ZeroVariance,      // constant series, correlation undefined
    DuplicateEvent,    // same counter recorded by two passes
    UnknownFrequency,  // LUT lookup outside the declared DVFS states
    EmptySelection,    // oracle rejects every singleton
    MissingKey,        // row lacks a counter/core the model needs
    LengthMismatch,    // series of unequal length
    MissingCoverage,   // corpus lacks a requested (subsystem, frequency)
    InvalidArgument,   // bad parameter (fraction out of range, k < 1, ...)
};

class Error : public std::runtime_error {
  public:
    Error(ErrorKind kind, std::string message)
        : std::runtime_error(std::move(message)), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

  private:
    ErrorKind kind_;
};

inline const char* to_string(ErrorKind k) {
    switch (k) {
        case ErrorKind::Io: return "io";
        case ErrorKind::Parse: return "parse";
        case ErrorKind::Validation: return "validation";
        case ErrorKind::ZeroVariance: return "zero-variance";
        case ErrorKind::DuplicateEvent: return "duplicate-event";
        case ErrorKind::UnknownFrequency: return "unknown-frequency";
        case ErrorKind::EmptySelection: return "empty-selection";
        case ErrorKind::MissingKey: return "missing-key";
        case ErrorKind::LengthMismatch: return "length-mismatch";
        case ErrorKind::MissingCoverage: return "missing-coverage";
        case ErrorKind::InvalidArgument: return "invalid-argument";
    }
    return "unknown";
}

}  // namespace lutpower
