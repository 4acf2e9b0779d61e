// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "doctest.h"
#include "molmimo/channel.hpp"
#include "molmimo/modem.hpp"
#include "support.hpp"

using namespace molmimo;

namespace {

VoltageTrace flat(std::size_t n, double value = 0.0) { return {{0.0, 0.1, n}, std::vector<double>(n, value)}; }

ConcentrationTrace constant_input(std::size_t n, double c) { return {{0.0, 0.1, n}, std::vector<double>(n, c)}; }

// Single-link chain at calibrated SISO defaults: preamble, then `payload`.
struct Loop {
    TimingConfig timing = TimingConfig::siso();
    SensorParams sensor;
    DetectionConfig det;
    ChannelParams channel;
    Geometry2x2 geometry;
    double t0 = 1.0;

    VoltageTrace transmit(const Bits& payload, std::uint64_t seed = 0) const {
        Bits frame = preamble_bits(0, 1, timing.preamble_slots);
        frame.insert(frame.end(), payload.begin(), payload.end());
        const Bits streams[1] = {frame};
        const auto schedule = modulate(streams, t0, timing, channel.molecules_per_burst);
        const double end = t0 + static_cast<double>(frame.size() + 4) * timing.symbol_period + 10.0;
        const TimeGrid grid{0.0, 0.1, static_cast<std::size_t>(end / 0.1)};
        const auto conc = synthesize_traces(schedule, channel_impulse_matrix(geometry, channel, grid));
        return sense(conc[0], sensor, seed);
    }

    SlotDecisions receive(const VoltageTrace& v, std::size_t n) const {
        const double start = detect_preamble(v, timing, det);
        return detect_bits(v, start, n, timing, det, preamble_rise(v, start, timing, 0, 1));
    }
};

Bits pattern(std::uint32_t value, std::size_t len) {
    Bits b(len);
    for (std::size_t k = 0; k < len; ++k) b[k] = (value >> (len - 1 - k)) & 1u;
    return b;
}

} // namespace

TEST_CASE("modulate places one burst per one-bit") {
    const TimingConfig t = TimingConfig::siso();
    const Bits one[1] = {{1}};
    const auto s1 = modulate(one, 0.0, t);
    REQUIRE(s1.size() == 1);
    CHECK(s1[0].time == 0.0);

    const Bits zeros[1] = {{0, 0, 0}};
    CHECK(modulate(zeros, 0.0, t).empty());

    const Bits mixed[1] = {{1, 0, 1}};
    const auto s3 = modulate(mixed, 0.0, t);
    REQUIRE(s3.size() == 2);
    CHECK(s3[0].time == 0.0);
    CHECK(s3[1].time == doctest::Approx(6.8));

    CHECK(modulate(std::span<const Bits>{}, 0.0, t).empty());
    CHECK(test::code_of([&] { modulate(one, -1.0, t); }) == ErrorCode::InvalidTime);
}

TEST_CASE("preamble slots alternate owners") {
    CHECK(preamble_bits(0, 2, 2) == Bits{1, 0});
    CHECK(preamble_bits(1, 2, 2) == Bits{0, 1});
    CHECK(preamble_bits(0, 1, 2) == Bits{1, 1});
    CHECK(preamble_bits(1, 2, 4) == Bits{0, 1, 0, 1});
}

TEST_CASE("sensor basics") {
    SensorParams s;
    const auto zero = sense(constant_input(50, 0.0), s, 1);
    CHECK(std::all_of(zero.values.begin(), zero.values.end(), [](double v) { return v == 0.0; }));

    SUBCASE("step response reaches 1 - 1/e after one time constant") {
        const double c0 = 5e17;
        const auto v = sense(constant_input(40, c0), s, 0);
        CHECK(v.values[0] == 0.0);
        const auto at_tau = static_cast<std::size_t>(std::llround(s.response_time / 0.1));
        CHECK(v.values[at_tau] / (s.gain * c0) == doctest::Approx(0.632).epsilon(1e-3));
        CHECK(v.values[at_tau] / (s.gain * c0) == doctest::Approx(1.0 - std::exp(-1.0)).epsilon(1e-12));
    }
    SUBCASE("saturation pins the output") {
        const auto v = sense(constant_input(100, 1e22), s, 0);
        CHECK(v.values.back() == s.saturation);
        CHECK(*std::max_element(v.values.begin(), v.values.end()) == s.saturation);
    }
    SUBCASE("noise is seeded and clamped") {
        s.noise = 0.2;
        const auto a = sense(constant_input(200, 1e17), s, 42);
        const auto b = sense(constant_input(200, 1e17), s, 42);
        const auto c = sense(constant_input(200, 1e17), s, 43);
        CHECK(a.values == b.values);
        CHECK(a.values != c.values);
        CHECK(a.values[0] == 0.0);
        CHECK(std::all_of(a.values.begin(), a.values.end(), [&](double v) { return v >= 0.0 && v <= s.saturation; }));
    }
    SUBCASE("resampling to the sensor rate") {
        const ConcentrationTrace fine{{0.0, 0.01, 1001}, std::vector<double>(1001, 1e17)};
        const auto v = sense(fine, s, 0);
        CHECK(v.grid.step == doctest::Approx(0.1));
        CHECK(v.grid.count == 101);
    }
    SUBCASE("mismatched trace length") {
        ConcentrationTrace bad = constant_input(10, 1.0);
        bad.values.pop_back();
        CHECK(test::code_of([&] { sense(bad, s, 0); }) == ErrorCode::GridMismatch);
    }
}

TEST_CASE("sensor output is causal") {
    SensorParams s;
    s.noise = 0.05;
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 5e17);
    ConcentrationTrace c = constant_input(300, 0.0);
    for (auto& x : c.values) x = u(rng);
    const auto base = sense(c, s, 11);
    for (std::size_t m : {0u, 17u, 150u, 298u}) {
        ConcentrationTrace changed = c;
        for (std::size_t n = m; n < changed.values.size(); ++n) changed.values[n] *= 3.0;
        const auto v = sense(changed, s, 11);
        // Input sample m first acts on output sample m + 1.
        for (std::size_t n = 0; n <= m; ++n) CHECK(v.values[n] == base.values[n]);
    }
}

TEST_CASE("start indicator search") {
    const TimingConfig t = TimingConfig::siso();
    const DetectionConfig det;

    CHECK(test::code_of([&] { detect_preamble(flat(100), t, det); }) == ErrorCode::NoStartIndicator);

    SUBCASE("clean pulse") {
        auto v = flat(200);
        for (std::size_t n = 57; n < 90; ++n) v.values[n] = 1.0 - std::exp(-(double(n) - 56.0) / 2.0);
        const double a = 5.7;
        CHECK(std::abs(detect_preamble(v, t, det) - a) <= 0.1 + 1e-9);
    }
    SUBCASE("sensed burst arrives where the trace first clears the threshold") {
        Loop loop;
        const auto v = loop.transmit({});
        const double start = detect_preamble(v, loop.timing, det);
        const auto peak = *std::max_element(v.values.begin(), v.values.end());
        const auto first = std::find_if(v.values.begin(), v.values.end(), [&](double x) { return x > 0.5 * peak; });
        CHECK(std::abs(start - v.grid.time(static_cast<std::size_t>(first - v.values.begin()))) <= 0.1 + 1e-9);
        CHECK(start > loop.t0);
    }
    SUBCASE("equal candidates resolve to the earlier one") {
        auto v = flat(300);
        for (std::size_t n = 40; n < 60; ++n) v.values[n] = 1.0;
        for (std::size_t n = 200; n < 220; ++n) v.values[n] = 1.0;
        CHECK(detect_preamble(v, t, det) == doctest::Approx(4.0));
        DetectionConfig strict;
        strict.threshold_fraction = 1.0;
        CHECK(detect_preamble(v, t, strict) == doctest::Approx(4.0));
    }
}

TEST_CASE("cross gains from the pilot slots") {
    const TimingConfig t = TimingConfig::mimo();
    const DetectionConfig det;
    const SensorParams s;
    const ChannelParams p;
    const Geometry2x2 g;
    const Bits bits[2] = {preamble_bits(0, 2, 2), preamble_bits(1, 2, 2)};
    const auto schedule = modulate(bits, 1.0, t, p.molecules_per_burst);
    const TimeGrid grid{0.0, 0.1, 400};

    auto gains_for = [&](const ImpulseMatrix& m) {
        const auto c = synthesize_traces(schedule, m);
        const auto v0 = sense(c[0], s, 0), v1 = sense(c[1], s, 0);
        const double start = std::min(detect_preamble(v0, t, det), detect_preamble(v1, t, det));
        return estimate_cross_gain(v0, v1, start, t, det);
    };

    const auto m = channel_impulse_matrix(g, p, grid);
    const auto gains = gains_for(m);
    CHECK(gains.a01 > 0.0);
    CHECK(std::abs(gains.a01 - gains.a10) / std::max(gains.a01, gains.a10) < 0.05);

    ImpulseMatrix isolated = m;
    std::fill(isolated.h[0][1].begin(), isolated.h[0][1].end(), 0.0);
    std::fill(isolated.h[1][0].begin(), isolated.h[1][0].end(), 0.0);
    const auto none = gains_for(isolated);
    CHECK(none.a01 <= det.noise_floor);
    CHECK(none.a10 <= det.noise_floor);

    const auto quiet = flat(400);
    CHECK(test::code_of([&] { estimate_cross_gain(quiet, quiet, 3.0, t, det); }) == ErrorCode::PreambleNotDetected);
}

TEST_CASE("interference cancellation") {
    const VoltageTrace base{{0.0, 0.1, 5}, {0.5, 1.0, 1.5, 1.0, 0.5}};
    const VoltagePair v{base, base};
    const VoltagePair est{base, base};

    SUBCASE("zero gains are the identity") {
        const auto out = cancel_ili(v, IliGains{}, est);
        CHECK(out[0].values == v[0].values);
        CHECK(out[1].values == v[1].values);
    }
    SUBCASE("exact estimate removes the injected interference") {
        std::mt19937_64 rng(5);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        VoltageTrace clean{{0.0, 0.1, 500}, {}}, other = clean;
        for (std::size_t n = 0; n < 500; ++n) {
            clean.values.push_back(u(rng));
            other.values.push_back(u(rng));
        }
        const double alpha = 0.75;
        VoltageTrace mixed = clean;
        for (std::size_t n = 0; n < 500; ++n) mixed.values[n] += alpha * other.values[n];
        const auto out = cancel_ili({mixed, other}, {alpha, 0.0}, {clean, other});
        double residual = 0.0, injected = 0.0;
        for (std::size_t n = 0; n < 500; ++n) {
            residual += std::pow(out[0].values[n] - clean.values[n], 2);
            injected += std::pow(alpha * other.values[n], 2);
        }
        CHECK(residual < 0.01 * injected);
    }
    SUBCASE("negative results clamp to zero") {
        const auto out = cancel_ili(v, {10.0, 10.0}, est);
        CHECK(std::all_of(out[0].values.begin(), out[0].values.end(), [](double x) { return x == 0.0; }));
    }
    SUBCASE("grids must agree") {
        VoltagePair odd = v;
        odd[1].grid.step = 0.2;
        CHECK(test::code_of([&] { cancel_ili(odd, {0.5, 0.5}, est); }) == ErrorCode::GridMismatch);
    }
}

TEST_CASE("bit decisions") {
    Loop loop;
    SUBCASE("documented five-bit pattern") {
        const Bits sent{1, 0, 1, 1, 0};
        CHECK(loop.receive(loop.transmit(sent), sent.size()).bits == sent);
    }
    SUBCASE("silence after the preamble reads as zeros") {
        const Bits sent(8, 0);
        const auto d = loop.receive(loop.transmit(sent), sent.size());
        CHECK(d.bits == sent);
    }
    SUBCASE("frame past the trace end") {
        const auto v = loop.transmit({1, 1});
        const double start = detect_preamble(v, loop.timing, loop.det);
        CHECK(test::code_of([&] { detect_bits(v, start, 500, loop.timing, loop.det, 1.0); }) ==
              ErrorCode::TraceTooShort);
    }
    SUBCASE("vanishing threshold with noise flags every slot that rises") {
        loop.sensor.noise = 0.05;
        loop.det.threshold_fraction = 1e-9;
        const Bits sent(30, 0);
        const auto d = loop.receive(loop.transmit(sent, 9), sent.size());
        std::size_t ones = 0;
        for (std::size_t k = 0; k < sent.size(); ++k) {
            CHECK(d.bits[k] == (d.statistics[k] > d.threshold ? 1 : 0));
            ones += d.bits[k];
        }
        CHECK(ones >= 25);
    }
}

TEST_CASE("noiseless loop-back is the identity on every short pattern") {
    Loop loop;
    for (std::size_t len = 1; len <= 12; ++len)
        for (std::uint32_t value = 0; value < (1u << len); ++value) {
            const Bits sent = pattern(value, len);
            const auto got = loop.receive(loop.transmit(sent), len).bits;
            if (got != sent) {
                FAIL_CHECK("loop-back failed for length " << len << " value " << value);
                return;
            }
        }
    std::mt19937_64 rng(12);
    for (int trial = 0; trial < 400; ++trial) {
        const std::size_t len = 13 + static_cast<std::size_t>(trial % 8);
        const Bits sent = pattern(static_cast<std::uint32_t>(rng()) & ((1u << len) - 1), len);
        CHECK(loop.receive(loop.transmit(sent), len).bits == sent);
    }
}

TEST_CASE("more molecules in a slot never lowers its statistic") {
    const TimingConfig t = TimingConfig::mimo();
    const SensorParams s;
    const ChannelParams p;
    const auto m = channel_impulse_matrix(Geometry2x2{}, p, TimeGrid{0.0, 0.1, 900});
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 40; ++trial) {
        Bits b(12);
        for (auto& x : b) x = rng() & 1u;
        b[0] = 1;
        const Bits streams[1] = {b};
        auto schedule = modulate(streams, 1.0, t, p.molecules_per_burst);
        const auto v = sense(synthesize_traces(schedule, m)[0], s, 0);
        const double start = detect_preamble(v, t, DetectionConfig{});
        const auto before = slot_statistics(v, start, 0, b.size(), t);

        const std::size_t pick = rng() % schedule.size();
        schedule[pick].molecules *= 1.0 + static_cast<double>(rng() % 100) / 25.0;
        const auto slot = static_cast<std::size_t>(std::llround((schedule[pick].time - 1.0) / t.symbol_period));
        const auto after = slot_statistics(sense(synthesize_traces(schedule, m)[0], s, 0), start, 0, b.size(), t);
        CHECK(after[slot] >= before[slot]);
    }
}

TEST_CASE("decisions are invariant to a common scale") {
    Loop loop;
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 30; ++trial) {
        const Bits sent = pattern(static_cast<std::uint32_t>(rng()) & 0xffffu, 16);
        const auto v = loop.transmit(sent);
        const double start = detect_preamble(v, loop.timing, loop.det);
        const double ref = preamble_rise(v, start, loop.timing, 0, 1);
        const auto base = detect_bits(v, start, sent.size(), loop.timing, loop.det, ref);
        for (double c : {0.25, 2.0, 3.7}) {
            VoltageTrace scaled = v;
            for (auto& x : scaled.values) x *= c;
            CHECK(detect_bits(scaled, start, sent.size(), loop.timing, loop.det, c * ref).bits == base.bits);
        }
    }
}

TEST_CASE("slot diagnostics CSV") {
    const SlotDiagnostic rows[] = {{0, 0, 0.25, 0.5, 0}, {1, 3, 1.25, 0.5, 1}};
    std::ostringstream os;
    write_slot_csv(os, rows);
    CHECK(os.str() == "rx,slot,statistic,threshold,bit\n0,0,0.25,0.5,0\n1,3,1.25,0.5,1\n");
}

TEST_CASE("configuration validation") {
    TimingConfig t;
    t.guard = t.symbol_period;
    CHECK(test::code_of([&] { t.validate(); }) == ErrorCode::InvalidParameter);
    TimingConfig one_slot;
    one_slot.preamble_slots = 1;
    CHECK(test::code_of([&] { one_slot.validate(2); }) == ErrorCode::InvalidParameter);
    DetectionConfig d;
    d.threshold_fraction = 0.0;
    CHECK(test::code_of([&] { d.validate(); }) == ErrorCode::InvalidParameter);
    SensorParams s;
    s.response_time = -1.0;
    CHECK(test::code_of([&] { s.validate(); }) == ErrorCode::InvalidParameter);
}
