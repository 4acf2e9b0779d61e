// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace molmimo {

// Numeric values are part of the C ABI (see molmimo.h); append only.
enum class ErrorCode : int {
    Ok = 0,
    InvalidTime = 1,
    InvalidParameter = 2,
    DegenerateGeometry = 3,
    InvalidParticleCount = 4,
    ScheduleOutOfRange = 5,
    GridMismatch = 6,
    NoStartIndicator = 7,
    PreambleNotDetected = 8,
    TraceTooShort = 9,
    UnsupportedCharacter = 10,
    EmptyMessage = 11,
    MissingEndIndicator = 12,
    MalformedStream = 13,
    InvalidSweep = 14,
    InvalidConfig = 15,
    NotFound = 16,
    Conflict = 17,
    Io = 18,
    Internal = 19,
};

std::string_view error_name(ErrorCode code) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& detail)
        : std::runtime_error(detail), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& detail) {
    throw Error(code, detail);
}

} // namespace molmimo
