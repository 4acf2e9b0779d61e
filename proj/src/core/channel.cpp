// SPDX-License-Identifier: Apache-2.0
#include "molmimo/channel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <string>
#include <thread>

#include "molmimo/error.hpp"
#include "quadrature.hpp"
#include "rng.hpp"

namespace molmimo {

namespace {

bool finite(double v) { return std::isfinite(v); }

double ball_volume(double radius) { return 4.0 / 3.0 * std::numbers::pi * radius * radius * radius; }

void validate_record(const SprayRecord& r, const TimeGrid& grid, double earliest) {
    if (r.link != 0 && r.link != 1)
        fail(ErrorCode::InvalidParameter, "spray record link must be 0 or 1, got " + std::to_string(r.link));
    if (!finite(r.time) || !finite(r.molecules))
        fail(ErrorCode::InvalidParameter, "spray record has non-finite fields");
    if (r.molecules < 0.0) fail(ErrorCode::InvalidParameter, "spray record molecules must be >= 0");
    const double slack = 1e-9 * grid.step;
    if (r.time < earliest - slack || r.time > grid.end() + slack)
        fail(ErrorCode::ScheduleOutOfRange,
             "emission at t=" + std::to_string(r.time) + " s lies outside the time grid");
}

} // namespace

double Vec3::norm() const { return std::sqrt(norm2()); }

bool Vec3::finite() const { return std::isfinite(x) && std::isfinite(y) && std::isfinite(z); }

void ChannelParams::validate() const {
    if (!finite(diffusivity) || !drift.finite() || !finite(molecules_per_burst) || !finite(burst_duration))
        fail(ErrorCode::InvalidParameter, "channel parameters must be finite");
    if (diffusivity <= 0.0) fail(ErrorCode::InvalidParameter, "diffusivity must be > 0");
    if (molecules_per_burst < 0.0) fail(ErrorCode::InvalidParameter, "molecules per burst must be >= 0");
    if (burst_duration < 0.0) fail(ErrorCode::InvalidParameter, "burst duration must be >= 0");
}

double Geometry2x2::min_link_distance() const {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& r : rx)
        for (const auto& t : tx) best = std::min(best, (r - t).norm());
    return best;
}

void Geometry2x2::validate() const {
    for (const auto& p : tx)
        if (!p.finite()) fail(ErrorCode::InvalidParameter, "tx position must be finite");
    for (const auto& p : rx)
        if (!p.finite()) fail(ErrorCode::InvalidParameter, "rx position must be finite");
    if (!finite(capture_radius) || capture_radius <= 0.0)
        fail(ErrorCode::InvalidParameter, "capture radius must be > 0");
    const double d = min_link_distance();
    if (d <= 0.0) fail(ErrorCode::DegenerateGeometry, "a tx and rx share a position");
    if (capture_radius >= d)
        fail(ErrorCode::DegenerateGeometry, "capture radius must be smaller than every tx-rx distance");
}

void TimeGrid::validate() const {
    if (!finite(start) || !finite(step) || step <= 0.0)
        fail(ErrorCode::InvalidParameter, "time grid needs a finite start and a step > 0");
    if (count < 1) fail(ErrorCode::InvalidParameter, "time grid needs at least one sample");
}

double impulse_concentration(const Vec3& r, double t, const ChannelParams& p) {
    if (!r.finite() || !finite(t)) fail(ErrorCode::InvalidParameter, "non-finite position or time");
    p.validate();
    if (t <= 0.0) fail(ErrorCode::InvalidTime, "impulse response is defined for t > 0 only");
    if (p.molecules_per_burst == 0.0) return 0.0;
    const double four_dt = 4.0 * p.diffusivity * t;
    const Vec3 offset = r - t * p.drift;
    return p.molecules_per_burst * std::pow(std::numbers::pi * four_dt, -1.5) *
           std::exp(-offset.norm2() / four_dt);
}

ImpulseMatrix channel_impulse_matrix(const Geometry2x2& g, const ChannelParams& p, const TimeGrid& grid) {
    g.validate();
    p.validate();
    grid.validate();
    ChannelParams unit = p;
    unit.molecules_per_burst = 1.0;

    ImpulseMatrix m;
    m.grid = grid;
    for (std::size_t i = 0; i < 2; ++i) {
        for (std::size_t j = 0; j < 2; ++j) {
            const Vec3 r = g.rx[i] - g.tx[j];
            auto& h = m.h[i][j];
            h.assign(grid.count, 0.0);
            for (std::size_t k = 0; k < grid.count; ++k) {
                const double t = grid.time(k);
                if (t > 0.0) h[k] = impulse_concentration(r, t, unit);
            }
        }
    }
    return m;
}

TracePair synthesize_traces(std::span<const SprayRecord> schedule, const ImpulseMatrix& m) {
    const TimeGrid& grid = m.grid;
    grid.validate();
    for (const auto& row : m.h)
        for (const auto& h : row)
            if (h.size() != grid.count) fail(ErrorCode::GridMismatch, "impulse response length differs from grid");

    TracePair out;
    for (auto& tr : out) {
        tr.grid = grid;
        tr.values.assign(grid.count, 0.0);
    }
    for (const auto& rec : schedule) {
        validate_record(rec, grid, 0.0);
        const auto shift = static_cast<std::size_t>(std::llround(rec.time / grid.step));
        if (shift >= grid.count || rec.molecules == 0.0) continue;
        for (std::size_t i = 0; i < 2; ++i) {
            const auto& h = m.h[i][static_cast<std::size_t>(rec.link)];
            auto& v = out[i].values;
            for (std::size_t n = shift; n < grid.count; ++n) v[n] += rec.molecules * h[n - shift];
        }
    }
    return out;
}

namespace {

struct WalkSetup {
    const Geometry2x2& g;
    const ChannelParams& p;
    const TimeGrid& grid;
    unsigned substeps;
    std::size_t instants;
    double h;
    double rho2;
    double speed;
    double jump_coeff;   // 6 sigma per sqrt(second)
};

// Walks one particle across every sub-sample instant and adds its sensor
// occupancy to `counts`. A particle whose clearance to both sensor balls
// exceeds drift plus six diffusive standard deviations over the next m
// instants takes one exact Gaussian jump of duration m*h instead of m single
// steps: the law at the landing instant is unchanged, and reaching a ball in
// between needs a 6-sigma excursion along one direction (p < 2e-9).
void walk_particle(const WalkSetup& w, const Vec3& origin, double release, std::uint64_t key,
                   std::array<std::vector<std::uint64_t>, 2>& counts) {
    detail::NormalSource normal(key);
    const double two_d = 2.0 * w.p.diffusivity;
    const double half = 0.5 * static_cast<double>(w.substeps - 1);
    const double t0 = w.grid.start - half * w.h;

    double qf = std::ceil((release - t0) / w.h - 1e-9);
    std::size_t q = qf < 0.0 ? 0 : static_cast<std::size_t>(qf);
    if (q >= w.instants) return;

    auto move = [&](Vec3& pos, double dur) {
        if (dur <= 0.0) return;
        const double s = std::sqrt(two_d * dur);
        const double nx = normal();
        const double ny = normal();
        const double nz = normal();
        pos = pos + dur * w.p.drift + Vec3{s * nx, s * ny, s * nz};
    };

    Vec3 pos = origin;
    move(pos, t0 + static_cast<double>(q) * w.h - release);

    const double a = w.speed * w.h;
    const double b = w.jump_coeff * std::sqrt(w.h);
    const double rho = std::sqrt(w.rho2);
    while (true) {
        double nearest = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < 2; ++i) {
            const double d2 = (pos - w.g.rx[i]).norm2();
            if (d2 <= w.rho2) ++counts[i][q / w.substeps];
            nearest = std::min(nearest, d2);
        }
        if (q + 1 >= w.instants) return;

        // Largest m with a*m + b*sqrt(m) < clearance.
        const double clearance = std::sqrt(nearest) - rho;
        std::size_t m = 1;
        if (clearance > a + b) {
            double u;
            if (a > 0.0)
                u = (-b + std::sqrt(b * b + 4.0 * a * clearance)) / (2.0 * a);
            else
                u = clearance / b;
            const double mf = std::floor(u * u);
            m = static_cast<std::size_t>(std::clamp(mf, 1.0, static_cast<double>(w.instants)));
            // Landing inside the grid is only needed if the particle still has
            // instants left; a jump past the end simply finishes the walk.
            if (q + m >= w.instants) return;
        }
        move(pos, static_cast<double>(m) * w.h);
        q += m;
    }
}

} // namespace

ParticleResult simulate_particles(std::span<const SprayRecord> schedule, const Geometry2x2& g,
                                  const ChannelParams& p, const TimeGrid& grid,
                                  const ParticleOptions& opts) {
    if (opts.particles == 0) fail(ErrorCode::InvalidParticleCount, "particle count must be >= 1");
    if (opts.substeps == 0 || opts.substeps % 2 == 0)
        fail(ErrorCode::InvalidParameter, "substeps must be odd and >= 1");
    g.validate();
    p.validate();
    grid.validate();
    for (const auto& rec : schedule) validate_record(rec, grid, grid.start);

    const double volume = ball_volume(g.capture_radius);
    ParticleResult result;
    for (auto& tr : result.traces) {
        tr.grid = grid;
        tr.values.assign(grid.count, 0.0);
    }
    result.released = static_cast<std::uint64_t>(opts.particles) * schedule.size();
    // Every walk runs until the last instant of the grid (or provably stays
    // away from both sensors until then); none is ever removed.
    result.tracked_to_end = result.released;
    if (schedule.empty()) return result;

    const bool uniform = std::all_of(schedule.begin(), schedule.end(), [&](const SprayRecord& r) {
        return r.molecules == schedule.front().molecules;
    });
    if (!uniform) {
        // Records carry different molecule counts: simulate each on its own stream and superpose.
        for (std::size_t r = 0; r < schedule.size(); ++r) {
            ParticleOptions single = opts;
            single.seed = detail::stream_key(opts.seed, r, 0x5eed);
            const auto part = simulate_particles(std::span(&schedule[r], 1), g, p, grid, single);
            for (std::size_t i = 0; i < 2; ++i)
                for (std::size_t k = 0; k < grid.count; ++k)
                    result.traces[i].values[k] += part.traces[i].values[k];
        }
        return result;
    }
    if (schedule.front().molecules == 0.0) return result;

    WalkSetup w{g,
                p,
                grid,
                opts.substeps,
                grid.count * opts.substeps,
                grid.step / opts.substeps,
                g.capture_radius * g.capture_radius,
                p.drift.norm(),
                6.0 * std::sqrt(2.0 * p.diffusivity)};

    unsigned workers = opts.workers;
    if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());

    const std::size_t n = opts.particles;
    using Counts = std::array<std::vector<std::uint64_t>, 2>;
    std::vector<Counts> partial(workers);
    for (auto& c : partial)
        for (auto& v : c) v.assign(grid.count, 0);

    auto run_range = [&](unsigned worker) {
        auto& counts = partial[worker];
        const std::size_t lo = n * worker / workers;
        const std::size_t hi = n * (worker + 1) / workers;
        for (std::size_t r = 0; r < schedule.size(); ++r) {
            const Vec3 origin = g.tx[static_cast<std::size_t>(schedule[r].link)];
            for (std::size_t k = lo; k < hi; ++k)
                walk_particle(w, origin, schedule[r].time, detail::stream_key(opts.seed, r, k), counts);
        }
    };

    if (workers == 1) {
        run_range(0);
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (unsigned t = 0; t < workers; ++t) pool.emplace_back(run_range, t);
    }

    // Integer counts are merged exactly, so the split across workers cannot
    // change the result.
    const double scale = schedule.front().molecules / static_cast<double>(n) /
                         static_cast<double>(opts.substeps) / volume;
    for (std::size_t i = 0; i < 2; ++i) {
        for (std::size_t k = 0; k < grid.count; ++k) {
            std::uint64_t total = 0;
            for (const auto& c : partial) total += c[i][k];
            result.traces[i].values[k] = static_cast<double>(total) * scale;
        }
    }
    return result;
}

double impulse_horizon(const Geometry2x2& g, const ChannelParams& p, double rel_floor) {
    g.validate();
    p.validate();
    ChannelParams unit = p;
    unit.molecules_per_burst = 1.0;
    constexpr double scan_step = 0.01;
    constexpr double max_horizon = 1e4;
    double horizon = 0.0;
    for (const auto& r : g.rx) {
        for (const auto& t : g.tx) {
            const Vec3 d = r - t;
            double peak = 0.0;
            double tt = scan_step;
            for (; tt < max_horizon; tt += scan_step) {
                const double c = impulse_concentration(d, tt, unit);
                if (c > peak) {
                    peak = c;
                } else if (c < rel_floor * peak) {
                    break;
                }
            }
            horizon = std::max(horizon, tt);
        }
    }
    return horizon;
}

ImpulseMatrix particle_impulse_matrix(const Geometry2x2& g, const ChannelParams& p,
                                      const TimeGrid& grid, const ParticleOptions& opts) {
    grid.validate();
    if (grid.start > 0.0)
        fail(ErrorCode::InvalidParameter, "particle impulse matrix needs a grid that starts at or before t=0");
    const double horizon = impulse_horizon(g, p);
    const double span = horizon - grid.start;
    std::size_t count = grid.count;
    if (span / grid.step + 2.0 < static_cast<double>(grid.count))
        count = static_cast<std::size_t>(span / grid.step) + 2;

    TimeGrid window = grid;
    window.count = count;

    ImpulseMatrix m;
    m.grid = grid;
    for (std::size_t j = 0; j < 2; ++j) {
        ParticleOptions o = opts;
        o.seed = detail::stream_key(opts.seed, 0x7a11, j);
        const SprayRecord burst{static_cast<int>(j), 0.0, 1.0};
        auto res = simulate_particles(std::span(&burst, 1), g, p, window, o);
        for (std::size_t i = 0; i < 2; ++i) {
            auto& h = m.h[i][j];
            h.assign(grid.count, 0.0);
            std::copy(res.traces[i].values.begin(), res.traces[i].values.end(), h.begin());
        }
    }
    return m;
}

double mass_integral(const ChannelParams& p, double t, double rel_tol) {
    p.validate();
    if (!finite(t) || t <= 0.0) fail(ErrorCode::InvalidTime, "mass integral needs t > 0");
    if (p.molecules_per_burst == 0.0) return 0.0;
    const double spread = 8.0 * std::sqrt(2.0 * p.diffusivity * t);
    const Vec3 centre = t * p.drift;
    const double tol = rel_tol * p.molecules_per_burst;
    const double box = 2.0 * spread;

    auto over_z = [&](double x, double y) {
        return detail::adaptive_simpson(
            [&](double z) { return impulse_concentration(Vec3{x, y, z}, t, p); }, centre.z - spread,
            centre.z + spread, tol / (box * box));
    };
    auto over_yz = [&](double x) {
        return detail::adaptive_simpson([&](double y) { return over_z(x, y); }, centre.y - spread,
                                        centre.y + spread, tol / box);
    };
    return detail::adaptive_simpson(over_yz, centre.x - spread, centre.x + spread, tol);
}

void write_traces_csv(std::ostream& os, const TracePair& traces) {
    if (traces[0].grid != traces[1].grid || traces[0].values.size() != traces[1].values.size())
        fail(ErrorCode::GridMismatch, "traces must share one grid");
    const auto precision = os.precision(10);
    os << "t,rx0,rx1\n";
    for (std::size_t k = 0; k < traces[0].values.size(); ++k)
        os << traces[0].grid.time(k) << ',' << traces[0].values[k] << ',' << traces[1].values[k] << '\n';
    os.precision(precision);
}

} // namespace molmimo
