// error.hpp — single exception type carrying a machine-readable failure kind

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace kpo {

enum class ErrorKind {
    InvalidDimension,
    NumericDomain,
    ContractViolation,
    InvalidParameter,
    NoDriveCoupling,
    RescalingUndefined,
    ExpansionBlowup,
    SecularLeak,
    InternalConsistency,
    IntegratorFailure,
    BranchBreak,
    EmptyWell,
    DimensionMismatch,
    UnlabeledSpectrum,
    MatchingFailure,
    Config,
    Io,
};

std::string_view to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

inline std::string_view to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::InvalidDimension: return "invalid-dimension";
        case ErrorKind::NumericDomain: return "numeric-domain";
        case ErrorKind::ContractViolation: return "contract-violation";
        case ErrorKind::InvalidParameter: return "invalid-parameter";
        case ErrorKind::NoDriveCoupling: return "no-drive-coupling";
        case ErrorKind::RescalingUndefined: return "rescaling-undefined";
        case ErrorKind::ExpansionBlowup: return "expansion-blowup";
        case ErrorKind::SecularLeak: return "secular-leak";
        case ErrorKind::InternalConsistency: return "internal-consistency";
        case ErrorKind::IntegratorFailure: return "integrator-failure";
        case ErrorKind::BranchBreak: return "branch-break";
        case ErrorKind::EmptyWell: return "empty-well";
        case ErrorKind::DimensionMismatch: return "dimension-mismatch";
        case ErrorKind::UnlabeledSpectrum: return "unlabeled-spectrum";
        case ErrorKind::MatchingFailure: return "matching-failure";
        case ErrorKind::Config: return "config";
        case ErrorKind::Io: return "io";
    }
    return "unknown";
}

}  // namespace kpo
