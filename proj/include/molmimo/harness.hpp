// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "molmimo/channel.hpp"
#include "molmimo/modem.hpp"
#include "molmimo/protocol.hpp"
#include "molmimo/receiver.hpp"

namespace molmimo {

enum class Backend { Analytical, MonteCarlo };

std::string_view backend_name(Backend b);
Backend parse_backend(std::string_view s);   // "analytical" | "mc" | "monte-carlo"

struct RunConfig {
    Mode mode = Mode::Mimo;
    std::string message = "abcdef";
    ChannelParams channel;
    Geometry2x2 geometry;
    TimingConfig timing = TimingConfig::mimo();
    SensorParams sensor;
    DetectionConfig detection;
    std::uint64_t seed = 1;
    Backend backend = Backend::Analytical;
    std::size_t particles = 1'000'000;   // per burst, Monte-Carlo backend only
    unsigned mc_substeps = 9;
    unsigned workers = 0;                // Monte-Carlo fan-out; never changes results
    bool cancel_ili = true;
    double tx_start = 1.0;               // s, emission of the first preamble slot

    /// Calibrated defaults; the symbol period depends on the mode.
    static RunConfig defaults(Mode mode);
    void validate() const;
};

struct LinkReport {
    Mode mode = Mode::Mimo;
    std::string backend;
    std::uint64_t seed = 0;
    std::string message_sent;
    std::string message_decoded;
    std::vector<std::string> decoded_per_rx;
    double air_time = 0.0;              // s, simulated clock
    std::size_t payload_bits = 0;
    double data_rate = 0.0;             // bps, rounded half-up to 2 decimals
    double data_rate_raw = 0.0;         // bps
    std::size_t bit_errors = 0;
    std::size_t compared_bits = 0;
    std::size_t char_errors = 0;
    double frame_start = 0.0;           // s, detected start indicator
    std::optional<IliGains> gains;
    bool truncated = false;
    std::string sync_failure;           // empty unless the receiver never locked
    std::vector<SlotDiagnostic> slots;

    double ber() const { return compared_bits ? double(bit_errors) / double(compared_bits) : 0.0; }
    double cer() const {
        return message_sent.empty() ? 0.0 : double(char_errors) / double(message_sent.size());
    }
};

/// Everything a run produced, for display and export.
struct LinkRun {
    LinkReport report;
    RunConfig config;
    Frame frame;
    Schedule schedule;
    TracePair concentration;
    std::vector<VoltageTrace> voltages;     // one per active receiver
};

struct ComparisonReport {
    LinkReport siso;
    LinkReport mimo;
    double rate_ratio = 0.0;   // mimo.data_rate_raw / siso.data_rate_raw
};

/// Sample grid covering the whole frame plus propagation tail.
TimeGrid frame_grid(const RunConfig& cfg, const Frame& frame);

/// Channel realisation for a run: closed form, or particle estimate seeded from cfg.seed.
ImpulseMatrix build_channel(const RunConfig& cfg, const TimeGrid& grid);

/// Zero-pads or truncates `m` to `grid` (steps must agree).
ImpulseMatrix fit_to_grid(const ImpulseMatrix& m, const TimeGrid& grid);

/// encode -> modulate -> channel -> sense -> receive -> decode. When
/// `channel` is given it replaces the backend's channel realisation.
LinkRun run_link_detailed(const RunConfig& cfg, const ImpulseMatrix* channel = nullptr);
LinkReport run_link(const RunConfig& cfg);

ComparisonReport compare_runs(const RunConfig& siso, const RunConfig& mimo);
ComparisonReport compare_modes(std::string_view message, std::uint64_t seed,
                               const std::function<void(RunConfig&)>& adjust = {});

/// Noise-free rise of a single burst at rx0 from tx0, in volts.
double nominal_signal_rise(const RunConfig& cfg);

struct SweepRow {
    double sigma = 0.0;        // noise level as a fraction of the nominal signal rise
    Mode mode = Mode::Siso;
    double ber = 0.0;          // mean over repetitions
    double cer = 0.0;          // mean over repetitions
    double median_cer = 0.0;
    std::size_t bits = 0;      // total compared bits
};

/// For each level and mode, `reps` runs with seeds cfg.seed, cfg.seed+1, ...
std::vector<SweepRow> sweep_noise(std::span<const double> levels, unsigned reps, const RunConfig& cfg);

/// CSV with header `sigma,mode,ber,cer`.
void write_sweep_csv(std::ostream& os, std::span<const SweepRow> rows);

struct ChannelValidation {
    std::size_t particles = 0;
    unsigned substeps = 1;
    double analytic_peak = 0.0;        // molecules/m^3 at rx0 from a tx0 burst
    double analytic_peak_time = 0.0;   // s after emission
    std::vector<double> mc_peaks;
    std::vector<double> relative_errors;
    double median_relative_error = 0.0;
    double mass_time = 0.0;
    double mass_ratio = 0.0;           // quadrature integral / Q
    bool peak_ok = false;              // median error < 5 %
    bool mass_ok = false;              // |ratio - 1| < 1 %
};

ChannelValidation validate_channel(std::size_t particles, std::uint64_t seed, unsigned seeds = 5,
                                   unsigned substeps = 9, unsigned workers = 0);

} // namespace molmimo
