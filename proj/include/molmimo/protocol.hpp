// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "molmimo/modem.hpp"

namespace molmimo {

enum class Mode { Siso, Mimo };

std::string_view mode_name(Mode m);
Mode parse_mode(std::string_view s);   // "siso" | "mimo", case-insensitive
std::size_t stream_count(Mode m);

/// 5-bit character codes: a-z -> 1..26, ' ' -> 27, '.' -> 28, ',' -> 29,
/// '?' -> 30, end of transmission -> 31. Code 0 is reserved.
class CodecTable {
public:
    static constexpr unsigned bits_per_char = 5;
    static constexpr std::uint8_t eot = 31;
    static constexpr std::uint8_t reserved = 0;

    /// Code for `c` after case folding, or nullopt if unsupported.
    static std::optional<std::uint8_t> encode(char c);
    /// Character for a payload code; reserved and unknown codes map to '?'.
    static char decode(std::uint8_t code);
    static bool supported(char c) { return encode(c).has_value(); }
};

struct Frame {
    Mode mode = Mode::Mimo;
    std::vector<Bits> streams;        // each ends with the EOT code
    std::size_t payload_chars = 0;
    std::size_t payload_bits = 0;     // 5 * payload_chars, summed over streams
};

/// Characters 1,3,5,... go to stream 0 and 2,4,6,... to stream 1 (MIMO).
Frame encode_text(std::string_view msg, Mode mode);

/// Inverse of encode_text. Each stream is read up to its first EOT.
std::string decode_text(std::span<const Bits> streams, Mode mode);

/// Characters of one stream up to its EOT. With `require_eot` false a
/// stream without EOT decodes whatever whole characters it holds.
std::string decode_stream(const Bits& stream, bool require_eot = true);

/// Interleaves per-stream characters back into message order.
std::string interleave(std::span<const std::string> per_stream);

/// Payload air time: the longest stream's payload bits times Ts plus the
/// overhead (EOT and start indicator are charged to the overhead).
double frame_air_time(const Frame& f, const TimingConfig& timing);

/// Round half-up to `decimals` places.
double round_half_up(double value, int decimals);

} // namespace molmimo
