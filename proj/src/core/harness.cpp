// SPDX-License-Identifier: Apache-2.0
#include "molmimo/harness.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <ostream>
#include <string>

#include "molmimo/error.hpp"
#include "rng.hpp"

namespace molmimo {

namespace {

constexpr std::uint64_t kNoiseStream = 0x5e;
constexpr std::uint64_t kChannelStream = 0xc4;

// Longest propagation tail allowed on a frame grid.
constexpr double kMaxTail = 600.0;

double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

bool is_sync_failure(ErrorCode c) {
    return c == ErrorCode::NoStartIndicator || c == ErrorCode::PreambleNotDetected || c == ErrorCode::TraceTooShort;
}

} // namespace

std::string_view backend_name(Backend b) { return b == Backend::Analytical ? "analytical" : "mc"; }

Backend parse_backend(std::string_view s) {
    std::string lower(s);
    std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
    if (lower == "analytical") return Backend::Analytical;
    if (lower == "mc" || lower == "monte-carlo" || lower == "montecarlo") return Backend::MonteCarlo;
    fail(ErrorCode::InvalidConfig, "backend must be 'analytical' or 'mc', got '" + std::string(s) + "'");
}

RunConfig RunConfig::defaults(Mode mode) {
    RunConfig c;
    c.mode = mode;
    c.timing = mode == Mode::Siso ? TimingConfig::siso() : TimingConfig::mimo();
    return c;
}

void RunConfig::validate() const {
    channel.validate();
    geometry.validate();
    timing.validate(stream_count(mode));
    sensor.validate();
    detection.validate();
    if (backend == Backend::MonteCarlo && particles == 0)
        fail(ErrorCode::InvalidParticleCount, "Monte-Carlo backend needs at least one particle");
    if (mc_substeps == 0 || mc_substeps % 2 == 0) fail(ErrorCode::InvalidConfig, "mc_substeps must be odd");
    if (!std::isfinite(tx_start) || tx_start < 0.0) fail(ErrorCode::InvalidConfig, "tx_start must be >= 0");
}

TimeGrid frame_grid(const RunConfig& cfg, const Frame& frame) {
    std::size_t slots = 0;
    for (const auto& s : frame.streams) slots = std::max(slots, s.size());
    slots += cfg.timing.preamble_slots;
    const double tail =
        std::min(kMaxTail, impulse_horizon(cfg.geometry, cfg.channel, 1e-6)) + 2.0 * cfg.timing.symbol_period;
    const double end = cfg.tx_start + static_cast<double>(slots) * cfg.timing.symbol_period + tail;
    const double step = 1.0 / cfg.sensor.sample_rate;
    return {0.0, step, static_cast<std::size_t>(std::ceil(end / step)) + 1};
}

ImpulseMatrix build_channel(const RunConfig& cfg, const TimeGrid& grid) {
    if (cfg.backend == Backend::Analytical) return channel_impulse_matrix(cfg.geometry, cfg.channel, grid);
    ParticleOptions o;
    o.particles = cfg.particles;
    o.seed = detail::stream_key(cfg.seed, kChannelStream);
    o.substeps = cfg.mc_substeps;
    o.workers = cfg.workers;
    return particle_impulse_matrix(cfg.geometry, cfg.channel, grid, o);
}

ImpulseMatrix fit_to_grid(const ImpulseMatrix& m, const TimeGrid& grid) {
    if (m.grid.step != grid.step || m.grid.start != grid.start)
        fail(ErrorCode::GridMismatch, "channel realisation uses a different time step or origin");
    ImpulseMatrix out;
    out.grid = grid;
    for (std::size_t i = 0; i < 2; ++i) {
        for (std::size_t j = 0; j < 2; ++j) {
            out.h[i][j] = m.h[i][j];
            out.h[i][j].resize(grid.count, 0.0);
        }
    }
    return out;
}

LinkRun run_link_detailed(const RunConfig& cfg, const ImpulseMatrix* channel) {
    cfg.validate();
    LinkRun run;
    run.config = cfg;
    run.frame = encode_text(cfg.message, cfg.mode);
    const Frame& frame = run.frame;
    const std::size_t links = frame.streams.size();

    std::vector<Bits> tx_bits;
    std::size_t payload_slots = 0;
    for (std::size_t l = 0; l < links; ++l) {
        Bits b = preamble_bits(l, links, cfg.timing.preamble_slots);
        b.insert(b.end(), frame.streams[l].begin(), frame.streams[l].end());
        tx_bits.push_back(std::move(b));
        payload_slots = std::max(payload_slots, frame.streams[l].size());
    }
    run.schedule = modulate(tx_bits, cfg.tx_start, cfg.timing, cfg.channel.molecules_per_burst);

    const TimeGrid grid = frame_grid(cfg, frame);
    const ImpulseMatrix analytic = channel_impulse_matrix(cfg.geometry, cfg.channel, grid);
    ImpulseMatrix realised;
    if (channel != nullptr)
        realised = fit_to_grid(*channel, grid);
    else if (cfg.backend == Backend::MonteCarlo)
        realised = build_channel(cfg, grid);
    const ImpulseMatrix& actual = (channel != nullptr || cfg.backend == Backend::MonteCarlo) ? realised : analytic;

    run.concentration = synthesize_traces(run.schedule, actual);
    for (std::size_t r = 0; r < links; ++r)
        run.voltages.push_back(sense(run.concentration[r], cfg.sensor, detail::stream_key(cfg.seed, kNoiseStream, r)));

    LinkReport& rep = run.report;
    rep.mode = cfg.mode;
    rep.backend = std::string(backend_name(cfg.backend));
    rep.seed = cfg.seed;
    rep.message_sent = cfg.message;
    rep.payload_bits = frame.payload_bits;
    rep.air_time = frame_air_time(frame, cfg.timing);
    rep.data_rate_raw = static_cast<double>(frame.payload_bits) / rep.air_time;
    rep.data_rate = round_half_up(rep.data_rate_raw, 2);

    const ReceiverModel model{analytic, cfg.sensor, cfg.channel.molecules_per_burst};
    std::vector<Bits> received(links, Bits(payload_slots, 0));
    try {
        const Reception rx = receive(run.voltages, payload_slots, cfg.timing, cfg.detection, &model, cfg.cancel_ili);
        rep.frame_start = rx.frame_start;
        rep.gains = rx.gains;
        rep.truncated = rx.truncated;
        for (std::size_t r = 0; r < links; ++r) {
            const auto& d = rx.rx[r].decisions;
            received[r] = d.bits;
            for (std::size_t k = 0; k < d.bits.size(); ++k)
                rep.slots.push_back({r, k, d.statistics[k], d.threshold, d.bits[k]});
        }
    } catch (const Error& e) {
        if (!is_sync_failure(e.code())) throw;
        rep.sync_failure = std::string(error_name(e.code())) + ": " + e.what();
    }

    for (std::size_t r = 0; r < links; ++r) {
        rep.decoded_per_rx.push_back(decode_stream(received[r], false));
        const auto& sent = frame.streams[r];
        rep.compared_bits += sent.size();
        for (std::size_t k = 0; k < sent.size(); ++k)
            if (received[r][k] != sent[k]) ++rep.bit_errors;
    }
    rep.message_decoded = interleave(rep.decoded_per_rx);
    const std::size_t longest = std::max(rep.message_sent.size(), rep.message_decoded.size());
    for (std::size_t k = 0; k < longest; ++k) {
        const bool both = k < rep.message_sent.size() && k < rep.message_decoded.size();
        const char sent = both ? static_cast<char>(std::tolower(static_cast<unsigned char>(rep.message_sent[k]))) : 0;
        if (!both || sent != rep.message_decoded[k]) ++rep.char_errors;
    }
    return run;
}

LinkReport run_link(const RunConfig& cfg) { return run_link_detailed(cfg).report; }

ComparisonReport compare_runs(const RunConfig& siso, const RunConfig& mimo) {
    ComparisonReport out;
    out.siso = run_link(siso);
    out.mimo = run_link(mimo);
    out.rate_ratio = out.mimo.data_rate_raw / out.siso.data_rate_raw;
    return out;
}

ComparisonReport compare_modes(std::string_view message, std::uint64_t seed,
                               const std::function<void(RunConfig&)>& adjust) {
    auto make = [&](Mode mode) {
        RunConfig c = RunConfig::defaults(mode);
        c.message = std::string(message);
        c.seed = seed;
        if (adjust) adjust(c);
        c.mode = mode;
        return c;
    };
    return compare_runs(make(Mode::Siso), make(Mode::Mimo));
}

double nominal_signal_rise(const RunConfig& cfg) {
    cfg.channel.validate();
    cfg.geometry.validate();
    cfg.sensor.validate();
    const double span =
        cfg.tx_start + std::min(kMaxTail, impulse_horizon(cfg.geometry, cfg.channel, 1e-6)) + cfg.timing.symbol_period;
    const double step = 1.0 / cfg.sensor.sample_rate;
    const TimeGrid grid{0.0, step, static_cast<std::size_t>(std::ceil(span / step)) + 1};
    const SprayRecord burst{0, cfg.tx_start, cfg.channel.molecules_per_burst};
    const auto conc = synthesize_traces(std::span(&burst, 1), channel_impulse_matrix(cfg.geometry, cfg.channel, grid));
    SensorParams quiet = cfg.sensor;
    quiet.noise = 0.0;
    const auto v = sense(conc[0], quiet, 0);
    return *std::max_element(v.values.begin(), v.values.end());
}

std::vector<SweepRow> sweep_noise(std::span<const double> levels, unsigned reps, const RunConfig& cfg) {
    if (levels.empty()) fail(ErrorCode::InvalidSweep, "no noise levels given");
    if (reps == 0) fail(ErrorCode::InvalidSweep, "repetitions must be >= 1");
    for (double l : levels)
        if (!std::isfinite(l) || l < 0.0) fail(ErrorCode::InvalidSweep, "noise levels must be finite and >= 0");

    const double rise = nominal_signal_rise(cfg);
    std::vector<SweepRow> rows;
    for (double level : levels) {
        for (Mode mode : {Mode::Siso, Mode::Mimo}) {
            RunConfig c = cfg;
            c.mode = mode;
            c.timing.symbol_period = RunConfig::defaults(mode).timing.symbol_period;
            c.sensor.noise = level * rise;
            SweepRow row;
            row.sigma = level;
            row.mode = mode;
            std::vector<double> cers;
            for (unsigned r = 0; r < reps; ++r) {
                c.seed = cfg.seed + r;
                const LinkReport rep = run_link(c);
                row.ber += rep.ber();
                cers.push_back(rep.cer());
                row.bits += rep.compared_bits;
            }
            row.ber /= reps;
            for (double e : cers) row.cer += e;
            row.cer /= reps;
            row.median_cer = median(cers);
            rows.push_back(row);
        }
    }
    return rows;
}

void write_sweep_csv(std::ostream& os, std::span<const SweepRow> rows) {
    const auto precision = os.precision(10);
    os << "sigma,mode,ber,cer\n";
    for (const auto& r : rows) os << r.sigma << ',' << mode_name(r.mode) << ',' << r.ber << ',' << r.cer << '\n';
    os.precision(precision);
}

ChannelValidation validate_channel(std::size_t particles, std::uint64_t seed, unsigned seeds, unsigned substeps,
                                   unsigned workers) {
    if (particles == 0) fail(ErrorCode::InvalidParticleCount, "particle count must be >= 1");
    if (seeds == 0) fail(ErrorCode::InvalidParameter, "need at least one seed");
    const ChannelParams p;
    const Geometry2x2 g;
    const double horizon = impulse_horizon(g, p, 1e-9);
    const TimeGrid grid{0.0, 0.1, static_cast<std::size_t>(std::ceil(horizon / 0.1)) + 1};

    ChannelValidation out;
    out.particles = particles;
    out.substeps = substeps;

    const auto analytic = channel_impulse_matrix(g, p, grid);
    const auto& h00 = analytic.at(0, 0);
    const auto peak_at = static_cast<std::size_t>(std::max_element(h00.begin(), h00.end()) - h00.begin());
    out.analytic_peak = h00[peak_at] * p.molecules_per_burst;
    out.analytic_peak_time = grid.time(peak_at);

    const SprayRecord burst{0, 0.0, p.molecules_per_burst};
    for (unsigned s = 0; s < seeds; ++s) {
        ParticleOptions o;
        o.particles = particles;
        o.seed = seed + s;
        o.substeps = substeps;
        o.workers = workers;
        const auto res = simulate_particles(std::span(&burst, 1), g, p, grid, o);
        const auto& rx0 = res.traces[0].values;
        const double peak = *std::max_element(rx0.begin(), rx0.end());
        out.mc_peaks.push_back(peak);
        out.relative_errors.push_back(std::abs(peak - out.analytic_peak) / out.analytic_peak);
    }
    out.median_relative_error = median(out.relative_errors);
    out.mass_time = out.analytic_peak_time;
    out.mass_ratio = mass_integral(p, out.mass_time) / p.molecules_per_burst;
    out.peak_ok = out.median_relative_error < 0.05;
    out.mass_ok = std::abs(out.mass_ratio - 1.0) < 0.01;
    return out;
}

} // namespace molmimo
