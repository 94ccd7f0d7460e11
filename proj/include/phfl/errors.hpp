#pragma once

#include <stdexcept>
#include <string>

namespace phfl {

enum class ErrorKind {
    EmptyTier,
    WeightSumMismatch,
    IndexOutOfRange,
    ZeroRate,
    EmptyBatch,
    NonFiniteLoss,
    TooFewSamples,
    SingularAnchor,
    InfeasibleClient,
    NoFeasibleStart,
    ScheduleViolation,
    ZeroProbability,
    EmptyGroup,
    ConfigError,
    IoError,
};

/// Library-wide exception carrying a machine-checkable kind.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

inline const char* error_kind_name(ErrorKind k) {
    switch (k) {
        case ErrorKind::EmptyTier: return "EmptyTier";
        case ErrorKind::WeightSumMismatch: return "WeightSumMismatch";
        case ErrorKind::IndexOutOfRange: return "IndexOutOfRange";
        case ErrorKind::ZeroRate: return "ZeroRate";
        case ErrorKind::EmptyBatch: return "EmptyBatch";
        case ErrorKind::NonFiniteLoss: return "NonFiniteLoss";
        case ErrorKind::TooFewSamples: return "TooFewSamples";
        case ErrorKind::SingularAnchor: return "SingularAnchor";
        case ErrorKind::InfeasibleClient: return "InfeasibleClient";
        case ErrorKind::NoFeasibleStart: return "NoFeasibleStart";
        case ErrorKind::ScheduleViolation: return "ScheduleViolation";
        case ErrorKind::ZeroProbability: return "ZeroProbability";
        case ErrorKind::EmptyGroup: return "EmptyGroup";
        case ErrorKind::ConfigError: return "ConfigError";
        case ErrorKind::IoError: return "IoError";
    }
    return "Unknown";
}

[[noreturn]] inline void raise(ErrorKind kind, const std::string& msg) {
    throw Error(kind, std::string(error_kind_name(kind)) + ": " + msg);
}

}  // namespace phfl
