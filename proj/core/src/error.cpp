#include "fatloc/error.hpp"

namespace fatloc {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::OutOfBounds: return "OutOfBounds";
        case ErrorCode::DuplicatePoint: return "DuplicatePoint";
        case ErrorCode::UnknownPoint: return "UnknownPoint";
        case ErrorCode::UnknownEdge: return "UnknownEdge";
        case ErrorCode::UnknownNode: return "UnknownNode";
        case ErrorCode::RemoveNonLeaf: return "RemoveNonLeaf";
        case ErrorCode::RemoveMarked: return "RemoveMarked";
        case ErrorCode::DegenerateShape: return "DegenerateShape";
        case ErrorCode::CoincidentPoints: return "CoincidentPoints";
        case ErrorCode::OverlappingInput: return "OverlappingInput";
        case ErrorCode::OverlapViolation: return "OverlapViolation";
        case ErrorCode::NotSimilar: return "NotSimilar";
        case ErrorCode::NotThickEnough: return "NotThickEnough";
        case ErrorCode::UnknownHandle: return "UnknownHandle";
        case ErrorCode::PrecisionLimit: return "PrecisionLimit";
        case ErrorCode::ParseError: return "ParseError";
        case ErrorCode::ValidationError: return "ValidationError";
        case ErrorCode::PlacementFailure: return "PlacementFailure";
        case ErrorCode::MismatchError: return "MismatchError";
        case ErrorCode::InvalidArgument: return "InvalidArgument";
    }
    return "Unknown";
}

}  // namespace fatloc
