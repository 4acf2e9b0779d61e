// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "molmimo/channel.hpp"

namespace molmimo {

using Bits = std::vector<std::uint8_t>;

/// Slot timing shared by transmitter and receiver. `overhead` is the total
/// non-payload air time charged to a frame (start and end indicators).
struct TimingConfig {
    double symbol_period = 3.8;     // s
    std::size_t preamble_slots = 2;
    double guard = 1.0;             // s, slot window opens this long before the expected arrival
    double overhead = 6.0;          // s

    void validate(std::size_t active_links = 1) const;

    static TimingConfig siso() { return {3.4, 2, 1.0, 6.0}; }
    static TimingConfig mimo() { return {3.8, 2, 1.0, 6.0}; }
};

/// First-order gas sensor: dV/dt = (k*C - V)/tau, plus additive noise,
/// clamped to [0, saturation].
struct SensorParams {
    double gain = 4e-18;            // V per molecule/m^3
    double response_time = 0.5;     // s
    double noise = 0.0;             // V, per-sample standard deviation
    double saturation = 3.3;        // V
    double sample_rate = 10.0;      // Hz

    void validate() const;
};

struct VoltageTrace {
    TimeGrid grid;
    std::vector<double> values;     // V
};

struct DetectionConfig {
    double threshold_fraction = 0.5;   // beta
    double noise_floor = 1e-3;         // V, smallest usable pilot rise

    void validate() const;
};

/// Cross-link voltage gains: a01 scales rx1's own signal into rx0, a10 the reverse.
struct IliGains {
    double a01 = 0.0;
    double a10 = 0.0;

    /// Gain of link `tx`'s own-receiver signal as seen at receiver `rx`.
    double into(std::size_t rx) const { return rx == 0 ? a01 : a10; }
};

/// Start-indicator pattern of one link. Slot s belongs to link s % links and
/// only its owner sprays, so with two links every pilot slot is a solo slot.
Bits preamble_bits(std::size_t link, std::size_t links, std::size_t slots);

/// On-off keying: bit k of link l sprays one burst from tx l at t0 + k*Ts.
Schedule modulate(std::span<const Bits> bits_per_link, double t0, const TimingConfig& timing,
                  double molecules = 1.0);

VoltageTrace sense(const ConcentrationTrace& c, const SensorParams& s, std::uint64_t seed);

/// Index of the first sample of slot `slot` counted from the frame start
/// (preamble slots included). May be negative before the trace begins.
long slot_start_index(const VoltageTrace& v, double frame_start, std::size_t slot, const TimingConfig& timing);

std::size_t samples_per_slot(const VoltageTrace& v, const TimingConfig& timing);

/// In-slot rise (max V in the slot minus V at its first sample) for slots
/// [first, first + count).
std::vector<double> slot_statistics(const VoltageTrace& v, double frame_start, std::size_t first,
                                    std::size_t count, const TimingConfig& timing);

/// Number of whole slots (preamble included) that fit in the trace.
std::size_t slots_available(const VoltageTrace& v, double frame_start, const TimingConfig& timing);

/// Arrival time of the start indicator: the first sample whose rise over the
/// trailing Ts window exceeds beta times the largest such rise in the trace.
double detect_preamble(const VoltageTrace& v, const TimingConfig& timing, const DetectionConfig& cfg);

/// Mean statistic of the pilot slots owned by `link`.
double preamble_rise(const VoltageTrace& v, double frame_start, const TimingConfig& timing, std::size_t link,
                     std::size_t links);

IliGains estimate_cross_gain(const VoltageTrace& v0, const VoltageTrace& v1, double frame_start,
                             const TimingConfig& timing, const DetectionConfig& cfg);

using VoltagePair = std::array<VoltageTrace, 2>;

/// cleaned_i = max(0, v_i - a_ij * estimate_j).
VoltagePair cancel_ili(const VoltagePair& v, const IliGains& gains, const VoltagePair& own_estimates);

struct SlotDecisions {
    Bits bits;
    std::vector<double> statistics;
    double threshold = 0.0;
};

/// Payload decisions for `n` slots following the preamble. Bit k is 1 iff its
/// statistic exceeds beta * reference_rise.
SlotDecisions detect_bits(const VoltageTrace& v, double frame_start, std::size_t n, const TimingConfig& timing,
                          const DetectionConfig& cfg, double reference_rise);

struct SlotDiagnostic {
    std::size_t rx = 0;
    std::size_t slot = 0;       // payload slot index
    double statistic = 0.0;
    double threshold = 0.0;
    int bit = 0;
};

/// CSV with header `rx,slot,statistic,threshold,bit`.
void write_slot_csv(std::ostream& os, std::span<const SlotDiagnostic> rows);

} // namespace molmimo
