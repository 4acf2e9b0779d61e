// SPDX-License-Identifier: Apache-2.0
#include "molmimo/receiver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "molmimo/error.hpp"

namespace molmimo {

namespace {

SensorParams noiseless(SensorParams s) {
    s.noise = 0.0;
    return s;
}

Bits with_preamble(std::size_t link, std::size_t links, const TimingConfig& timing, const Bits& payload) {
    Bits out = preamble_bits(link, links, timing.preamble_slots);
    out.insert(out.end(), payload.begin(), payload.end());
    return out;
}

// Decisions for the slots that fit; the rest read as zero.
SlotDecisions decide(const VoltageTrace& v, double start, std::size_t n, std::size_t fit, const TimingConfig& timing,
                     const DetectionConfig& cfg, double reference) {
    SlotDecisions d = detect_bits(v, start, std::min(n, fit), timing, cfg, reference);
    d.bits.resize(n, 0);
    d.statistics.resize(n, 0.0);
    return d;
}

} // namespace

VoltageTrace reconstruct_own_signal(const ReceiverModel& model, std::size_t link, const Bits& frame_bits, double t0,
                                    const TimingConfig& timing) {
    std::array<Bits, 2> streams;
    streams[link] = frame_bits;
    const auto schedule = modulate(std::span<const Bits>(streams.data(), link + 1), t0, timing, model.molecules);

    // Bursts past the end of the model grid cannot affect it.
    Schedule in_range;
    for (const auto& r : schedule)
        if (r.time <= model.channel.grid.end()) in_range.push_back(r);
    const auto conc = synthesize_traces(in_range, model.channel);
    return sense(conc[link], noiseless(model.sensor), 0);
}

Reception receive(std::span<const VoltageTrace> traces, std::size_t payload_slots, const TimingConfig& timing,
                  const DetectionConfig& cfg, const ReceiverModel* model, bool cancel) {
    const std::size_t links = traces.size();
    if (links != 1 && links != 2) fail(ErrorCode::InvalidParameter, "receiver handles one or two sensors");
    timing.validate(links);
    cfg.validate();

    Reception out;
    out.payload_slots = payload_slots;

    // Both sensors hang off one receiver clock: the earliest start indicator wins.
    double start = std::numeric_limits<double>::infinity();
    bool found = false;
    for (const auto& v : traces) {
        try {
            start = std::min(start, detect_preamble(v, timing, cfg));
            found = true;
        } catch (const Error& e) {
            if (e.code() != ErrorCode::NoStartIndicator) throw;
        }
    }
    if (!found) fail(ErrorCode::NoStartIndicator, "no start indicator on any sensor");
    out.frame_start = start;

    std::size_t fit = std::numeric_limits<std::size_t>::max();
    for (const auto& v : traces) fit = std::min(fit, slots_available(v, start, timing));
    if (fit < timing.preamble_slots) fail(ErrorCode::TraceTooShort, "start indicator found too close to the trace end");
    fit -= timing.preamble_slots;
    out.truncated = fit < payload_slots;

    std::vector<double> rise(links);
    for (std::size_t i = 0; i < links; ++i) rise[i] = preamble_rise(traces[i], start, timing, i, links);

    if (links == 1) {
        out.rx.push_back({decide(traces[0], start, payload_slots, fit, timing, cfg, rise[0]), rise[0]});
        return out;
    }

    const IliGains gains = estimate_cross_gain(traces[0], traces[1], start, timing, cfg);
    out.gains = gains;

    if (!cancel) {
        for (std::size_t i = 0; i < 2; ++i)
            out.rx.push_back({decide(traces[i], start, payload_slots, fit, timing, cfg, rise[i]), rise[i]});
        return out;
    }
    if (model == nullptr) fail(ErrorCode::InvalidParameter, "interference cancellation needs a receiver model");

    // First pass: without knowing the other link, a slot carrying only
    // interference rises to about a_ij * rise_j and one carrying only the own
    // signal to rise_i; decide between the two.
    std::array<SlotDecisions, 2> tentative;
    for (std::size_t i = 0; i < 2; ++i) {
        const std::size_t j = 1 - i;
        const double reference = rise[i] + gains.into(i) * rise[j];
        tentative[i] = decide(traces[i], start, payload_slots, fit, timing, cfg, reference);
        out.tentative.push_back(tentative[i].bits);
    }

    // Locate the emission time: the model's noiseless view of the tentative
    // frame emitted at t=0 shows its start indicator `delay` after emission.
    const std::array<Bits, 2> frames{with_preamble(0, 2, timing, tentative[0].bits),
                                     with_preamble(1, 2, timing, tentative[1].bits)};
    double delay = std::numeric_limits<double>::infinity();
    {
        Schedule schedule = modulate(frames, 0.0, timing, model->molecules);
        std::erase_if(schedule, [&](const SprayRecord& r) { return r.time > model->channel.grid.end(); });
        const auto conc = synthesize_traces(schedule, model->channel);
        for (std::size_t i = 0; i < 2; ++i) {
            try {
                delay = std::min(delay, detect_preamble(sense(conc[i], noiseless(model->sensor), 0), timing, cfg));
            } catch (const Error& e) {
                if (e.code() != ErrorCode::NoStartIndicator) throw;
            }
        }
    }
    if (!std::isfinite(delay)) {
        for (std::size_t i = 0; i < 2; ++i) out.rx.push_back({tentative[i], rise[i]});
        return out;
    }
    const double t0 = std::max(0.0, start - delay);
    out.tx_start_estimate = t0;

    VoltagePair estimates{reconstruct_own_signal(*model, 0, frames[0], t0, timing),
                          reconstruct_own_signal(*model, 1, frames[1], t0, timing)};
    const VoltagePair received{traces[0], traces[1]};
    for (auto& e : estimates)
        if (e.grid != received[0].grid)
            fail(ErrorCode::GridMismatch, "receiver model grid differs from the sensed traces");
    const VoltagePair cleaned = cancel_ili(received, gains, estimates);

    for (std::size_t i = 0; i < 2; ++i)
        out.rx.push_back({decide(cleaned[i], start, payload_slots, fit, timing, cfg, rise[i]), rise[i]});
    return out;
}

} // namespace molmimo
