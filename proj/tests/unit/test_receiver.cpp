// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "molmimo/harness.hpp"
#include "molmimo/receiver.hpp"
#include "support.hpp"

using namespace molmimo;

namespace {

struct Mimo {
    TimingConfig timing = TimingConfig::mimo();
    SensorParams sensor;
    DetectionConfig det;
    ChannelParams channel;
    Geometry2x2 geometry;
    TimeGrid grid{0.0, 0.1, 1400};
    ImpulseMatrix m = channel_impulse_matrix(geometry, channel, grid);
    ReceiverModel model{m, sensor, channel.molecules_per_burst};

    std::array<Bits, 2> frames(const Bits& a, const Bits& b) const {
        std::array<Bits, 2> f{preamble_bits(0, 2, 2), preamble_bits(1, 2, 2)};
        f[0].insert(f[0].end(), a.begin(), a.end());
        f[1].insert(f[1].end(), b.begin(), b.end());
        return f;
    }

    std::vector<VoltageTrace> transmit(const Bits& a, const Bits& b, double t0, double noise = 0.0,
                                       std::uint64_t seed = 0) const {
        const auto f = frames(a, b);
        const auto c = synthesize_traces(modulate(f, t0, timing, channel.molecules_per_burst), m);
        SensorParams s = sensor;
        s.noise = noise;
        return {sense(c[0], s, seed), sense(c[1], s, seed + 1)};
    }
};

Bits random_bits(std::mt19937_64& rng, std::size_t n) {
    Bits b(n);
    for (auto& x : b) x = rng() & 1u;
    return b;
}

} // namespace

TEST_CASE("noiseless MIMO reception recovers both streams") {
    Mimo sys;
    std::mt19937_64 rng(4);
    std::size_t uncancelled_errors = 0;
    for (int trial = 0; trial < 25; ++trial) {
        const Bits a = random_bits(rng, 20), b = random_bits(rng, 20);
        const auto v = sys.transmit(a, b, 1.0 + 0.1 * trial);
        const auto r = receive(v, 20, sys.timing, sys.det, &sys.model, true);
        REQUIRE(r.rx.size() == 2);
        CHECK(r.rx[0].decisions.bits == a);
        CHECK(r.rx[1].decisions.bits == b);
        CHECK(r.gains.has_value());
        CHECK_FALSE(r.truncated);
        CHECK(r.tentative.size() == 2);

        // Without cancellation the cross-link rise alone clears the threshold.
        const auto raw = receive(v, 20, sys.timing, sys.det, &sys.model, false);
        CHECK(raw.tentative.empty());
        for (std::size_t k = 0; k < 20; ++k)
            uncancelled_errors += (raw.rx[0].decisions.bits[k] != a[k]) + (raw.rx[1].decisions.bits[k] != b[k]);
    }
    CHECK(uncancelled_errors > 0);
}

TEST_CASE("emission time is recovered from the start indicator") {
    Mimo sys;
    for (double t0 : {0.5, 1.0, 2.3, 4.0}) {
        const auto v = sys.transmit({1, 0, 1, 1, 0}, {0, 1, 1, 0, 1}, t0);
        const auto r = receive(v, 5, sys.timing, sys.det, &sys.model, true);
        REQUIRE(r.tx_start_estimate.has_value());
        CHECK(std::abs(*r.tx_start_estimate - t0) <= 0.1 + 1e-9);
    }
}

TEST_CASE("reconstructed own signal equals a noiseless transmission") {
    Mimo sys;
    const Bits payload{1, 1, 0, 1, 0, 0, 1};
    const auto f = sys.frames(payload, {});
    const auto own = reconstruct_own_signal(sys.model, 0, f[0], 1.0, sys.timing);
    const Bits single[1] = {f[0]};
    const auto c = synthesize_traces(modulate(single, 1.0, sys.timing, sys.channel.molecules_per_burst), sys.m);
    CHECK(own.values == sense(c[0], sys.sensor, 0).values);
}

TEST_CASE("single-sensor reception has no cross gains") {
    Mimo sys;
    sys.timing = TimingConfig::siso();
    Bits frame = preamble_bits(0, 1, 2);
    const Bits payload{0, 1, 1, 0, 1};
    frame.insert(frame.end(), payload.begin(), payload.end());
    const Bits streams[1] = {frame};
    const auto c = synthesize_traces(modulate(streams, 1.0, sys.timing, 1e18), sys.m);
    const std::vector<VoltageTrace> v{sense(c[0], sys.sensor, 0)};
    const auto r = receive(v, payload.size(), sys.timing, sys.det, nullptr, false);
    CHECK(r.rx.at(0).decisions.bits == payload);
    CHECK_FALSE(r.gains.has_value());
}

TEST_CASE("receiver failure modes") {
    Mimo sys;
    const VoltageTrace quiet{{0.0, 0.1, 500}, std::vector<double>(500, 0.0)};
    const std::vector<VoltageTrace> silent{quiet, quiet};
    CHECK(test::code_of([&] { receive(silent, 5, sys.timing, sys.det, &sys.model, true); }) ==
          ErrorCode::NoStartIndicator);

    const auto v = sys.transmit({1, 0, 1}, {0, 1, 1}, 1.0);
    CHECK(test::code_of([&] { receive(v, 3, sys.timing, sys.det, nullptr, true); }) == ErrorCode::InvalidParameter);

    // Only one pilot reaches the sensors: link 1 never fires.
    const Bits bits[1] = {Bits{1, 0, 1, 1}};
    const auto c = synthesize_traces(modulate(bits, 1.0, sys.timing, 1e18), sys.m);
    const std::vector<VoltageTrace> lone{sense(c[0], sys.sensor, 0), VoltageTrace{c[1].grid, std::vector<double>(c[1].values.size(), 0.0)}};
    CHECK(test::code_of([&] { receive(lone, 2, sys.timing, sys.det, &sys.model, true); }) ==
          ErrorCode::PreambleNotDetected);
}

TEST_CASE("slots past the end of the capture are flagged") {
    Mimo sys;
    const auto v = sys.transmit({1, 1, 1}, {1, 0, 1}, 1.0);
    const auto r = receive(v, 1000, sys.timing, sys.det, &sys.model, true);
    CHECK(r.truncated);
    CHECK(r.rx[0].decisions.bits.size() == 1000);
    CHECK(Bits(r.rx[0].decisions.bits.begin(), r.rx[0].decisions.bits.begin() + 3) == Bits{1, 1, 1});
}

TEST_CASE("cancellation lowers the bit error rate at ten percent noise") {
    RunConfig base = RunConfig::defaults(Mode::Mimo);
    base.sensor.noise = 0.1 * nominal_signal_rise(base);
    std::mt19937_64 rng(2024);
    std::vector<double> with, without;
    for (int trial = 0; trial < 10; ++trial) {
        RunConfig cfg = base;
        cfg.message = test::random_message(rng, 200, 200);
        cfg.seed = 100 + trial;
        const auto on = run_link(cfg);
        cfg.cancel_ili = false;
        const auto off = run_link(cfg);
        REQUIRE(on.compared_bits >= 1000);
        with.push_back(on.ber());
        without.push_back(off.ber());
    }
    std::sort(with.begin(), with.end());
    std::sort(without.begin(), without.end());
    const double med_on = 0.5 * (with[4] + with[5]), med_off = 0.5 * (without[4] + without[5]);
    MESSAGE("median BER with cancellation " << med_on << ", without " << med_off);
    CHECK(med_on < med_off);
}
