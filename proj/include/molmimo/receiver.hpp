// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <span>
#include <vector>

#include "molmimo/channel.hpp"
#include "molmimo/modem.hpp"

namespace molmimo {

/// What the receiver believes about the channel; used only to rebuild the
/// other link's own signal for interference cancellation.
struct ReceiverModel {
    ImpulseMatrix channel;      // on the same grid as the sensed traces
    SensorParams sensor;        // noise is ignored
    double molecules = 1.0;     // per burst
};

struct RxResult {
    SlotDecisions decisions;
    double preamble_rise = 0.0;
};

struct Reception {
    double frame_start = 0.0;
    std::size_t payload_slots = 0;
    bool truncated = false;               // the trace ended before the last payload slot
    std::vector<RxResult> rx;             // one per active receiver
    std::optional<IliGains> gains;        // MIMO only
    std::vector<Bits> tentative;          // first-pass MIMO decisions (empty otherwise)
    std::optional<double> tx_start_estimate;
};

/// Full non-coherent receiver for one (SISO) or two (MIMO) sensed traces:
/// start-indicator search, pilot-based cross-gain estimate, and, when
/// `cancel` is set, one decision-directed interference cancellation pass.
Reception receive(std::span<const VoltageTrace> traces, std::size_t payload_slots, const TimingConfig& timing,
                  const DetectionConfig& cfg, const ReceiverModel* model, bool cancel);

/// Noise-free sensed signal of `link` at its own receiver for the given
/// per-link bit streams (preamble included), frame emitted at t0.
VoltageTrace reconstruct_own_signal(const ReceiverModel& model, std::size_t link, const Bits& frame_bits, double t0,
                                    const TimingConfig& timing);

} // namespace molmimo
