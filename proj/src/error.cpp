#include "spf/error.hpp"

namespace spf {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::InsideObstacle: return "InsideObstacle";
        case ErrorCode::EmptyWorld: return "EmptyWorld";
        case ErrorCode::NonSmoothPoint: return "NonSmoothPoint";
        case ErrorCode::UnknownReach: return "UnknownReach";
        case ErrorCode::InvalidThreshold: return "InvalidThreshold";
        case ErrorCode::PenaltyUnbounded: return "PenaltyUnbounded";
        case ErrorCode::InvalidNormal: return "InvalidNormal";
        case ErrorCode::SaturatedPenalty: return "SaturatedPenalty";
        case ErrorCode::OutsidePracticalFreeSpace: return "OutsidePracticalFreeSpace";
        case ErrorCode::FieldEvaluationFailed: return "FieldEvaluationFailed";
        case ErrorCode::NoBoundary: return "NoBoundary";
        case ErrorCode::DegenerateGradient: return "DegenerateGradient";
        case ErrorCode::IndefiniteResult: return "IndefiniteResult";
        case ErrorCode::SchemaViolation: return "SchemaViolation";
        case ErrorCode::InfeasibleParameters: return "InfeasibleParameters";
        case ErrorCode::Unsupported: return "Unsupported";
    }
    return "Unknown";
}

}  // namespace spf
