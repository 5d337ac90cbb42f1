/// @file errors.hpp
/// @brief Error taxonomy shared by every module.
///
/// All failures are reported as exceptions derived from obbq::Error. Each
/// carries an ErrorCode so the CLI can map it to a distinct exit status and a
/// machine-readable error line.
#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace obbq {

enum class ErrorCode {
    InvalidGrid,
    DomainMismatch,
    GridMismatch,
    OriginEvaluation,
    NotDivergenceFree,
    InvalidArgument,
    QuadratureUnderflow,
    PoissonDivergence,
    ZeroGradient,
    InnerSolveFailure,
    NonFiniteIterate,
    PicardDiverged,
    ContinuationStalled,
    AprioriBoundExceeded,
    SweepDiverged,
    IoError,
    FormatError,
    VersionError,
    ConfigError,
    TimeNonpositive,
};

std::string_view error_name(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace obbq
