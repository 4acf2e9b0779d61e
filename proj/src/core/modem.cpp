// SPDX-License-Identifier: Apache-2.0
#include "molmimo/modem.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <random>
#include <string>

#include "molmimo/error.hpp"
#include "rng.hpp"

namespace molmimo {

void TimingConfig::validate(std::size_t active_links) const {
    if (!std::isfinite(symbol_period) || symbol_period <= 0.0)
        fail(ErrorCode::InvalidParameter, "symbol period must be > 0");
    if (!std::isfinite(overhead) || overhead < 0.0) fail(ErrorCode::InvalidParameter, "overhead must be >= 0");
    if (!std::isfinite(guard) || guard < 0.0 || guard >= symbol_period)
        fail(ErrorCode::InvalidParameter, "guard must lie in [0, symbol period)");
    if (preamble_slots < active_links)
        fail(ErrorCode::InvalidParameter, "need at least one preamble slot per active link");
}

void SensorParams::validate() const {
    const bool ok = std::isfinite(gain) && gain > 0.0 && std::isfinite(response_time) && response_time > 0.0 &&
                    std::isfinite(noise) && noise >= 0.0 && std::isfinite(saturation) && saturation > 0.0 &&
                    std::isfinite(sample_rate) && sample_rate > 0.0;
    if (!ok) fail(ErrorCode::InvalidParameter, "sensor parameters out of range");
}

void DetectionConfig::validate() const {
    if (!(threshold_fraction > 0.0 && threshold_fraction <= 1.0))
        fail(ErrorCode::InvalidParameter, "threshold fraction must lie in (0, 1]");
    if (!std::isfinite(noise_floor) || noise_floor < 0.0)
        fail(ErrorCode::InvalidParameter, "noise floor must be >= 0");
}

Bits preamble_bits(std::size_t link, std::size_t links, std::size_t slots) {
    Bits out(slots, 0);
    for (std::size_t s = 0; s < slots; ++s) out[s] = (s % links == link) ? 1 : 0;
    return out;
}

Schedule modulate(std::span<const Bits> bits_per_link, double t0, const TimingConfig& timing, double molecules) {
    if (bits_per_link.size() > 2) fail(ErrorCode::InvalidParameter, "at most two transmit links");
    if (!std::isfinite(t0) || t0 < 0.0) fail(ErrorCode::InvalidTime, "frame start must be >= 0");
    timing.validate();
    Schedule out;
    std::size_t longest = 0;
    for (const auto& b : bits_per_link) longest = std::max(longest, b.size());
    for (std::size_t k = 0; k < longest; ++k) {
        for (std::size_t link = 0; link < bits_per_link.size(); ++link) {
            const auto& b = bits_per_link[link];
            if (k < b.size() && b[k] != 0)
                out.push_back({static_cast<int>(link), t0 + static_cast<double>(k) * timing.symbol_period, molecules});
        }
    }
    return out;
}

VoltageTrace sense(const ConcentrationTrace& c, const SensorParams& s, std::uint64_t seed) {
    s.validate();
    c.grid.validate();
    if (c.values.size() != c.grid.count) fail(ErrorCode::GridMismatch, "concentration trace length differs from its grid");

    const double step = 1.0 / s.sample_rate;
    const double span = c.grid.end() - c.grid.start;
    VoltageTrace out;
    out.grid = {c.grid.start, step, static_cast<std::size_t>(std::floor(span / step + 1e-9)) + 1};
    out.values.assign(out.grid.count, 0.0);

    auto input_at = [&](std::size_t n) {
        const double pos = (out.grid.time(n) - c.grid.start) / c.grid.step;
        const auto idx = std::min<std::size_t>(static_cast<std::size_t>(std::llround(std::max(pos, 0.0))),
                                               c.values.size() - 1);
        return c.values[idx];
    };

    // Exact discretisation of the first-order lag under a zero-order hold.
    const double decay = std::exp(-step / s.response_time);
    std::mt19937_64 rng(detail::stream_key(seed, 0x5e4507));
    std::normal_distribution<double> noise(0.0, 1.0);
    double state = 0.0;
    for (std::size_t n = 1; n < out.grid.count; ++n) {
        state = state * decay + s.gain * input_at(n - 1) * (1.0 - decay);
        double v = state;
        if (s.noise > 0.0) v += s.noise * noise(rng);
        out.values[n] = std::clamp(v, 0.0, s.saturation);
    }
    return out;
}

std::size_t samples_per_slot(const VoltageTrace& v, const TimingConfig& timing) {
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(timing.symbol_period / v.grid.step)));
}

long slot_start_index(const VoltageTrace& v, double frame_start, std::size_t slot, const TimingConfig& timing) {
    const double t = frame_start - timing.guard + static_cast<double>(slot) * timing.symbol_period;
    return static_cast<long>(std::llround((t - v.grid.start) / v.grid.step));
}

std::size_t slots_available(const VoltageTrace& v, double frame_start, const TimingConfig& timing) {
    const std::size_t w = samples_per_slot(v, timing);
    std::size_t n = 0;
    while (true) {
        const long s = std::max(0L, slot_start_index(v, frame_start, n, timing));
        if (static_cast<std::size_t>(s) + w > v.values.size()) return n;
        ++n;
    }
}

std::vector<double> slot_statistics(const VoltageTrace& v, double frame_start, std::size_t first,
                                    std::size_t count, const TimingConfig& timing) {
    const std::size_t w = samples_per_slot(v, timing);
    std::vector<double> out;
    out.reserve(count);
    for (std::size_t k = first; k < first + count; ++k) {
        // A window opening before the first sample is clipped to it; the
        // trace is flat at zero before any emission.
        const auto s = static_cast<std::size_t>(std::max(0L, slot_start_index(v, frame_start, k, timing)));
        if (s + w > v.values.size())
            fail(ErrorCode::TraceTooShort, "slot " + std::to_string(k) + " extends past the end of the trace");
        const auto begin = v.values.begin() + static_cast<std::ptrdiff_t>(s);
        const double peak = *std::max_element(begin, begin + static_cast<std::ptrdiff_t>(w));
        out.push_back(peak - v.values[s]);
    }
    return out;
}

double detect_preamble(const VoltageTrace& v, const TimingConfig& timing, const DetectionConfig& cfg) {
    timing.validate();
    cfg.validate();
    if (v.values.empty()) fail(ErrorCode::NoStartIndicator, "empty trace");
    const std::size_t w = samples_per_slot(v, timing);
    const std::size_t n = v.values.size();

    std::vector<double> rise(n, 0.0);
    double best = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t lo = i >= w ? i - w : 0;
        const double floor = *std::min_element(v.values.begin() + static_cast<std::ptrdiff_t>(lo),
                                               v.values.begin() + static_cast<std::ptrdiff_t>(i) + 1);
        rise[i] = v.values[i] - floor;
        best = std::max(best, rise[i]);
    }
    if (best <= 0.0) fail(ErrorCode::NoStartIndicator, "trace never rises");
    const double level = cfg.threshold_fraction * best;
    for (std::size_t i = 0; i < n; ++i)
        if (rise[i] > level) return v.grid.time(i);
    // beta = 1: only the maximum itself qualifies, and it is not strictly above.
    const auto at = static_cast<std::size_t>(std::max_element(rise.begin(), rise.end()) - rise.begin());
    return v.grid.time(at);
}

double preamble_rise(const VoltageTrace& v, double frame_start, const TimingConfig& timing, std::size_t link,
                     std::size_t links) {
    const auto stats = slot_statistics(v, frame_start, 0, timing.preamble_slots, timing);
    double sum = 0.0;
    std::size_t owned = 0;
    for (std::size_t s = 0; s < stats.size(); ++s) {
        if (s % links != link) continue;
        sum += stats[s];
        ++owned;
    }
    if (owned == 0) fail(ErrorCode::PreambleNotDetected, "link owns no preamble slot");
    return sum / static_cast<double>(owned);
}

IliGains estimate_cross_gain(const VoltageTrace& v0, const VoltageTrace& v1, double frame_start,
                             const TimingConfig& timing, const DetectionConfig& cfg) {
    timing.validate(2);
    cfg.validate();
    if (v0.grid != v1.grid) fail(ErrorCode::GridMismatch, "receiver traces must share one grid");
    const std::array<std::vector<double>, 2> stats{
        slot_statistics(v0, frame_start, 0, timing.preamble_slots, timing),
        slot_statistics(v1, frame_start, 0, timing.preamble_slots, timing)};

    // Mean statistic at rx i over the solo slots of link j.
    auto solo = [&](std::size_t rx, std::size_t link) {
        double sum = 0.0;
        std::size_t n = 0;
        for (std::size_t s = link; s < timing.preamble_slots; s += 2) {
            sum += stats[rx][s];
            ++n;
        }
        return sum / static_cast<double>(n);
    };

    IliGains g;
    for (std::size_t j = 0; j < 2; ++j) {
        const std::size_t i = 1 - j;
        const double own = solo(j, j);
        if (!(own >= cfg.noise_floor) || own <= 0.0)
            fail(ErrorCode::PreambleNotDetected,
                 "pilot of link " + std::to_string(j) + " is below the noise floor at rx " + std::to_string(j));
        const double gain = solo(i, j) / own;
        (i == 0 ? g.a01 : g.a10) = gain;
    }
    return g;
}

VoltagePair cancel_ili(const VoltagePair& v, const IliGains& gains, const VoltagePair& own_estimates) {
    for (std::size_t i = 0; i < 2; ++i) {
        if (v[i].grid != v[0].grid || own_estimates[i].grid != v[0].grid ||
            v[i].values.size() != v[0].values.size() || own_estimates[i].values.size() != v[0].values.size())
            fail(ErrorCode::GridMismatch, "cancellation needs all traces on one grid");
    }
    if (!(gains.a01 >= 0.0) || !(gains.a10 >= 0.0)) fail(ErrorCode::InvalidParameter, "ILI gains must be >= 0");

    VoltagePair out = v;
    for (std::size_t i = 0; i < 2; ++i) {
        const double a = gains.into(i);
        if (a == 0.0) continue;
        const auto& est = own_estimates[1 - i].values;
        for (std::size_t n = 0; n < out[i].values.size(); ++n)
            out[i].values[n] = std::max(0.0, v[i].values[n] - a * est[n]);
    }
    return out;
}

SlotDecisions detect_bits(const VoltageTrace& v, double frame_start, std::size_t n, const TimingConfig& timing,
                          const DetectionConfig& cfg, double reference_rise) {
    timing.validate();
    cfg.validate();
    SlotDecisions out;
    out.threshold = cfg.threshold_fraction * reference_rise;
    out.statistics = slot_statistics(v, frame_start, timing.preamble_slots, n, timing);
    out.bits.reserve(n);
    for (double s : out.statistics) out.bits.push_back(s > out.threshold ? 1 : 0);
    return out;
}

void write_slot_csv(std::ostream& os, std::span<const SlotDiagnostic> rows) {
    const auto precision = os.precision(10);
    os << "rx,slot,statistic,threshold,bit\n";
    for (const auto& r : rows)
        os << r.rx << ',' << r.slot << ',' << r.statistic << ',' << r.threshold << ',' << r.bit << '\n';
    os.precision(precision);
}

} // namespace molmimo
