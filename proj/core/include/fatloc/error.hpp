#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace fatloc {

enum class ErrorCode {
    OutOfBounds,
    DuplicatePoint,
    UnknownPoint,
    UnknownEdge,
    UnknownNode,
    RemoveNonLeaf,
    RemoveMarked,
    DegenerateShape,
    CoincidentPoints,
    OverlappingInput,
    OverlapViolation,
    NotSimilar,
    NotThickEnough,
    UnknownHandle,
    PrecisionLimit,
    ParseError,
    ValidationError,
    PlacementFailure,
    MismatchError,
    InvalidArgument,
};

std::string_view to_string(ErrorCode code) noexcept;

// Single exception type for the library; callers switch on code().
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace fatloc
