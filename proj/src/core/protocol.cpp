// SPDX-License-Identifier: Apache-2.0
#include "molmimo/protocol.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <string>

#include "molmimo/error.hpp"

namespace molmimo {

std::string_view mode_name(Mode m) { return m == Mode::Siso ? "siso" : "mimo"; }

Mode parse_mode(std::string_view s) {
    std::string lower(s);
    std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
    if (lower == "siso") return Mode::Siso;
    if (lower == "mimo") return Mode::Mimo;
    fail(ErrorCode::InvalidConfig, "mode must be 'siso' or 'mimo', got '" + std::string(s) + "'");
}

std::size_t stream_count(Mode m) { return m == Mode::Siso ? 1 : 2; }

std::optional<std::uint8_t> CodecTable::encode(char c) {
    const auto u = static_cast<unsigned char>(c);
    if (u >= 'A' && u <= 'Z') return static_cast<std::uint8_t>(u - 'A' + 1);
    if (u >= 'a' && u <= 'z') return static_cast<std::uint8_t>(u - 'a' + 1);
    switch (c) {
    case ' ': return 27;
    case '.': return 28;
    case ',': return 29;
    case '?': return 30;
    default: return std::nullopt;
    }
}

char CodecTable::decode(std::uint8_t code) {
    if (code >= 1 && code <= 26) return static_cast<char>('a' + code - 1);
    switch (code) {
    case 27: return ' ';
    case 28: return '.';
    case 29: return ',';
    default: return '?';
    }
}

namespace {

void append_code(Bits& out, std::uint8_t code) {
    for (int b = CodecTable::bits_per_char - 1; b >= 0; --b) out.push_back((code >> b) & 1u);
}

} // namespace

Frame encode_text(std::string_view msg, Mode mode) {
    if (msg.empty()) fail(ErrorCode::EmptyMessage, "message is empty");
    Frame f;
    f.mode = mode;
    f.streams.assign(stream_count(mode), {});
    for (std::size_t i = 0; i < msg.size(); ++i) {
        const auto code = CodecTable::encode(msg[i]);
        if (!code) {
            char detail[96];
            std::snprintf(detail, sizeof detail, "unsupported character at position %zu (byte 0x%02x)", i,
                          static_cast<unsigned>(static_cast<unsigned char>(msg[i])));
            fail(ErrorCode::UnsupportedCharacter, detail);
        }
        append_code(f.streams[i % f.streams.size()], *code);
    }
    for (auto& s : f.streams) append_code(s, CodecTable::eot);
    f.payload_chars = msg.size();
    f.payload_bits = CodecTable::bits_per_char * msg.size();
    return f;
}

std::string decode_stream(const Bits& stream, bool require_eot) {
    if (require_eot && stream.size() % CodecTable::bits_per_char != 0)
        fail(ErrorCode::MalformedStream, "stream length is not a multiple of 5");
    std::string out;
    for (std::size_t k = 0; k + CodecTable::bits_per_char <= stream.size(); k += CodecTable::bits_per_char) {
        std::uint8_t code = 0;
        for (std::size_t b = 0; b < CodecTable::bits_per_char; ++b)
            code = static_cast<std::uint8_t>((code << 1) | (stream[k + b] & 1u));
        if (code == CodecTable::eot) return out;
        out.push_back(CodecTable::decode(code));
    }
    if (require_eot) fail(ErrorCode::MissingEndIndicator, "stream has no end-of-transmission code");
    return out;
}

std::string interleave(std::span<const std::string> per_stream) {
    std::string out;
    std::size_t longest = 0;
    for (const auto& s : per_stream) longest = std::max(longest, s.size());
    for (std::size_t k = 0; k < longest; ++k)
        for (const auto& s : per_stream)
            if (k < s.size()) out.push_back(s[k]);
    return out;
}

std::string decode_text(std::span<const Bits> streams, Mode mode) {
    if (streams.size() != stream_count(mode))
        fail(ErrorCode::MalformedStream, "expected " + std::to_string(stream_count(mode)) + " streams");
    std::vector<std::string> chars;
    for (const auto& s : streams) chars.push_back(decode_stream(s, true));
    return interleave(chars);
}

double frame_air_time(const Frame& f, const TimingConfig& timing) {
    std::size_t longest = 0;
    for (const auto& s : f.streams) {
        const std::size_t payload = s.size() >= CodecTable::bits_per_char ? s.size() - CodecTable::bits_per_char : 0;
        longest = std::max(longest, payload);
    }
    return static_cast<double>(longest) * timing.symbol_period + timing.overhead;
}

double round_half_up(double value, int decimals) {
    const double scale = std::pow(10.0, decimals);
    // The nudge absorbs binary representation error at exact halves (0.285 -> 0.29).
    return std::floor(value * scale + 0.5 + 1e-9) / scale;
}

} // namespace molmimo
