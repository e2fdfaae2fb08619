#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace spf {

enum class ErrorCode {
    InvalidArgument,
    InsideObstacle,
    EmptyWorld,
    NonSmoothPoint,
    UnknownReach,
    InvalidThreshold,
    PenaltyUnbounded,
    InvalidNormal,
    SaturatedPenalty,
    OutsidePracticalFreeSpace,
    FieldEvaluationFailed,
    NoBoundary,
    DegenerateGradient,
    IndefiniteResult,
    SchemaViolation,
    InfeasibleParameters,
    Unsupported,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace spf
