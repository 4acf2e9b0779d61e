// SPDX-License-Identifier: Apache-2.0
#include <random>
#include <set>
#include <string>

#include "doctest.h"
#include "molmimo/protocol.hpp"
#include "support.hpp"

using namespace molmimo;

namespace {
const std::string kSupported = "abcdefghijklmnopqrstuvwxyz .,?";
}

TEST_CASE("codec table is a bijection onto 1..30") {
    std::set<std::uint8_t> codes;
    for (char c : kSupported) {
        const auto code = CodecTable::encode(c);
        REQUIRE(code.has_value());
        CHECK(*code >= 1);
        CHECK(*code <= 30);
        CHECK(*code != CodecTable::eot);
        CHECK(CodecTable::decode(*code) == c);
        codes.insert(*code);
    }
    CHECK(codes.size() == kSupported.size());
    CHECK(CodecTable::encode('a') == 1);
    CHECK(CodecTable::encode('z') == 26);
    CHECK(CodecTable::encode(' ') == 27);
    CHECK(CodecTable::encode('.') == 28);
    CHECK(CodecTable::encode(',') == 29);
    CHECK(CodecTable::encode('?') == 30);
    CHECK(CodecTable::encode('Q') == CodecTable::encode('q'));
    CHECK_FALSE(CodecTable::encode('1').has_value());
    CHECK(CodecTable::decode(0) == '?');
}

TEST_CASE("encoding examples") {
    const auto a = encode_text("a", Mode::Siso);
    REQUIRE(a.streams.size() == 1);
    CHECK(a.streams[0] == Bits{0, 0, 0, 0, 1, 1, 1, 1, 1, 1});
    CHECK(a.payload_bits == 5);

    const auto f = encode_text("abcdef", Mode::Mimo);
    REQUIRE(f.streams.size() == 2);
    CHECK(f.streams[0].size() == 20);
    CHECK(f.streams[1].size() == 20);
    CHECK(decode_stream(f.streams[0]) == "ace");
    CHECK(decode_stream(f.streams[1]) == "bdf");
    CHECK(f.payload_bits == 30);
    CHECK(f.payload_chars == 6);

    CHECK(test::code_of([] { encode_text("\xc3\x89", Mode::Mimo); }) == ErrorCode::UnsupportedCharacter);
    CHECK(test::code_of([] { encode_text("", Mode::Siso); }) == ErrorCode::EmptyMessage);
}

TEST_CASE("decoding rules") {
    const auto f = encode_text("hello?", Mode::Siso);
    CHECK(decode_text(f.streams, Mode::Siso) == "hello?");
    const auto g = encode_text("hello?", Mode::Mimo);
    CHECK(decode_text(g.streams, Mode::Mimo) == "hello?");

    const Bits reserved{0, 0, 0, 0, 0, 0, 0, 0, 1, 0, 1, 1, 1, 1, 1};
    CHECK(decode_stream(reserved) == "?b");

    CHECK(test::code_of([] { decode_stream(Bits{0, 0, 0, 0, 1}); }) == ErrorCode::MissingEndIndicator);
    CHECK(test::code_of([] { decode_stream(Bits{0, 0, 1}); }) == ErrorCode::MalformedStream);
    CHECK(decode_stream(Bits{0, 0, 0, 0, 1, 0, 0}, false) == "a");
    const Bits one[1] = {Bits{1, 1, 1, 1, 1}};
    CHECK(test::code_of([&] { decode_text(one, Mode::Mimo); }) == ErrorCode::MalformedStream);
}

TEST_CASE("round trip over random and boundary messages") {
    std::mt19937_64 rng(31);
    std::vector<std::string> cases{"a", "?", " ", "zz", "a,b.c?", std::string(12, 'z'), std::string(11, ' ')};
    for (int i = 0; i < 2000; ++i) cases.push_back(test::random_message(rng, 1, 12));
    for (const auto& msg : cases)
        for (Mode m : {Mode::Siso, Mode::Mimo}) {
            const auto f = encode_text(msg, m);
            CHECK(decode_text(f.streams, m) == msg);
        }
    CHECK(decode_text(encode_text("MiXeD", Mode::Mimo).streams, Mode::Mimo) == "mixed");
}

TEST_CASE("stream balance") {
    for (std::size_t n = 1; n <= 13; ++n) {
        const auto f = encode_text(std::string(n, 'k'), Mode::Mimo);
        const std::size_t c0 = f.streams[0].size() / 5 - 1, c1 = f.streams[1].size() / 5 - 1;
        CHECK(c0 == (n + 1) / 2);
        CHECK(c1 == n / 2);
    }
}

TEST_CASE("air time follows the calibrated model") {
    CHECK(frame_air_time(encode_text("abcdef", Mode::Siso), TimingConfig::siso()) == doctest::Approx(108.0));
    CHECK(frame_air_time(encode_text("abcdef", Mode::Mimo), TimingConfig::mimo()) == doctest::Approx(63.0));
    const double ratio = frame_air_time(encode_text("abcdef", Mode::Siso), TimingConfig::siso()) /
                         frame_air_time(encode_text("abcdef", Mode::Mimo), TimingConfig::mimo());
    CHECK(ratio == doctest::Approx(12.0 / 7.0).epsilon(1e-12));

    Frame empty;
    empty.streams = {Bits{1, 1, 1, 1, 1}};
    CHECK(frame_air_time(empty, TimingConfig::siso()) == 6.0);

    std::mt19937_64 rng(2);
    for (int i = 0; i < 100; ++i) {
        std::string msg = test::random_message(rng, 6, 6);
        const double s = frame_air_time(encode_text(msg, Mode::Siso), TimingConfig::siso());
        const double m = frame_air_time(encode_text(msg, Mode::Mimo), TimingConfig::mimo());
        CHECK(s / m == doctest::Approx(12.0 / 7.0).epsilon(1e-12));
    }
}

TEST_CASE("rate rounding") {
    CHECK(round_half_up(30.0 / 108.0, 2) == doctest::Approx(0.28));
    CHECK(round_half_up(30.0 / 63.0, 2) == doctest::Approx(0.48));
    CHECK(round_half_up(0.285, 2) == doctest::Approx(0.29));
    CHECK(round_half_up(0.2849, 2) == doctest::Approx(0.28));
}

TEST_CASE("mode names") {
    CHECK(parse_mode("SISO") == Mode::Siso);
    CHECK(mode_name(Mode::Mimo) == "mimo");
    CHECK(test::code_of([] { parse_mode("miso"); }) == ErrorCode::InvalidConfig);
}
