// SPDX-License-Identifier: Apache-2.0
#include "molmimo/error.hpp"

namespace molmimo {

std::string_view error_name(ErrorCode code) noexcept {
    switch (code) {
    case ErrorCode::Ok: return "Ok";
    case ErrorCode::InvalidTime: return "InvalidTime";
    case ErrorCode::InvalidParameter: return "InvalidParameter";
    case ErrorCode::DegenerateGeometry: return "DegenerateGeometry";
    case ErrorCode::InvalidParticleCount: return "InvalidParticleCount";
    case ErrorCode::ScheduleOutOfRange: return "ScheduleOutOfRange";
    case ErrorCode::GridMismatch: return "GridMismatch";
    case ErrorCode::NoStartIndicator: return "NoStartIndicator";
    case ErrorCode::PreambleNotDetected: return "PreambleNotDetected";
    case ErrorCode::TraceTooShort: return "TraceTooShort";
    case ErrorCode::UnsupportedCharacter: return "UnsupportedCharacter";
    case ErrorCode::EmptyMessage: return "EmptyMessage";
    case ErrorCode::MissingEndIndicator: return "MissingEndIndicator";
    case ErrorCode::MalformedStream: return "MalformedStream";
    case ErrorCode::InvalidSweep: return "InvalidSweep";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::NotFound: return "NotFound";
    case ErrorCode::Conflict: return "Conflict";
    case ErrorCode::Io: return "Io";
    case ErrorCode::Internal: return "Internal";
    }
    return "Unknown";
}

} // namespace molmimo
