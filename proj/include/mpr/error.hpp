#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mpr {

enum class ErrorKind {
    UnknownParent,
    CycleDetected,
    LevelMismatch,
    MultipleParents,
    DuplicateNode,
    UnknownNode,
    LevelOutOfRange,
    ParseError,
    UnknownPoi,
    UnknownUser,
    EmptyAfterFilter,
    WindowTooLarge,
    InvalidConfig,
    UnknownAttribute,
    DimensionMismatch,
    MissingCoordinates,
    LeafLevel,
    IndexOutOfRange,
    VersionMismatch,
    CorruptCheckpoint,
    NoNegativeAvailable,
    LeafPoi,
    ZeroTotalScore,
    Diverged,
    Io,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace mpr
