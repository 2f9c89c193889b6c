#pragma once

#include <stdexcept>
#include <string>

namespace gridguard {

// Named error conditions raised by library operations. Verdict-style results
// (ingest outcomes, policy decisions, gate results) are returned as values;
// exceptions are reserved for contract violations and unusable inputs.
enum class ErrorCode {
    ConfigError,
    BinMismatch,
    EpsilonInvalid,
    AlphabetError,
    UnknownTenant,
    TenantIsolationError,
    IntegrityError,
    InvalidArtifact,
    UnverifiableArtifact,
    ImmutableViolation,
    NotFound,
    MissingReference,
    DimensionMismatch,
    EmptyDataset,
    AlreadyClosed,
    UnknownEventKind,
    IoError,
    ParseError,
};

inline const char* error_code_name(ErrorCode c) {
    switch (c) {
        case ErrorCode::ConfigError: return "ConfigError";
        case ErrorCode::BinMismatch: return "BinMismatch";
        case ErrorCode::EpsilonInvalid: return "EpsilonInvalid";
        case ErrorCode::AlphabetError: return "AlphabetError";
        case ErrorCode::UnknownTenant: return "UnknownTenant";
        case ErrorCode::TenantIsolationError: return "TenantIsolationError";
        case ErrorCode::IntegrityError: return "IntegrityError";
        case ErrorCode::InvalidArtifact: return "InvalidArtifact";
        case ErrorCode::UnverifiableArtifact: return "UnverifiableArtifact";
        case ErrorCode::ImmutableViolation: return "ImmutableViolation";
        case ErrorCode::NotFound: return "NotFound";
        case ErrorCode::MissingReference: return "MissingReference";
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::EmptyDataset: return "EmptyDataset";
        case ErrorCode::AlreadyClosed: return "AlreadyClosed";
        case ErrorCode::UnknownEventKind: return "UnknownEventKind";
        case ErrorCode::IoError: return "IoError";
        case ErrorCode::ParseError: return "ParseError";
    }
    return "Unknown";
}

class Error : public std::runtime_error {
  public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(error_code_name(code)) + ": " + what), code_(code) {}

    ErrorCode code() const { return code_; }

  private:
    ErrorCode code_;
};

}  // namespace gridguard
