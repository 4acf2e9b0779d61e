// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

namespace molmimo {

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    friend Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
    friend Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
    friend Vec3 operator*(double s, Vec3 a) { return {s * a.x, s * a.y, s * a.z}; }
    friend bool operator==(const Vec3&, const Vec3&) = default;

    double norm2() const { return x * x + y * y + z * z; }
    double norm() const;
    bool finite() const;
};

/// Free-space advection-diffusion parameters. The drift stands in for spray
/// momentum and room airflow; `diffusivity` is an effective (turbulent) value.
struct ChannelParams {
    double diffusivity = 0.05;            // m^2/s
    Vec3 drift{1.0, 0.0, 0.0};            // m/s
    double molecules_per_burst = 1e18;    // Q
    double burst_duration = 0.1;          // s, modelled as an instantaneous release

    void validate() const;
};

/// Two emitters and two sensors. Sensors are balls of radius `capture_radius`.
struct Geometry2x2 {
    std::array<Vec3, 2> tx{Vec3{0.0, 0.2, 0.0}, Vec3{0.0, -0.2, 0.0}};
    std::array<Vec3, 2> rx{Vec3{3.0, 0.2, 0.0}, Vec3{3.0, -0.2, 0.0}};
    double capture_radius = 0.05;

    void validate() const;
    double min_link_distance() const;
};

struct TimeGrid {
    double start = 0.0;
    double step = 0.1;
    std::size_t count = 1;

    void validate() const;
    double time(std::size_t i) const { return start + static_cast<double>(i) * step; }
    double end() const { return time(count - 1); }
    bool operator==(const TimeGrid&) const = default;
};

struct SprayRecord {
    int link = 0;
    double time = 0.0;        // s
    double molecules = 0.0;

    bool operator==(const SprayRecord&) const = default;
};

using Schedule = std::vector<SprayRecord>;

struct ConcentrationTrace {
    TimeGrid grid;
    std::vector<double> values;   // molecules/m^3
};

using TracePair = std::array<ConcentrationTrace, 2>;

/// h(i, j): response at rx i to a unit burst from tx j released at t = 0,
/// sampled on `grid` (zero for t <= 0).
struct ImpulseMatrix {
    TimeGrid grid;
    std::array<std::array<std::vector<double>, 2>, 2> h;

    const std::vector<double>& at(std::size_t rx, std::size_t tx) const { return h.at(rx).at(tx); }
};

/// Green's function of the advection-diffusion equation for an instantaneous
/// point release of Q = p.molecules_per_burst at the origin at t = 0.
double impulse_concentration(const Vec3& r, double t, const ChannelParams& p);

ImpulseMatrix channel_impulse_matrix(const Geometry2x2& g, const ChannelParams& p, const TimeGrid& grid);

/// Linear superposition of time-shifted impulse responses (nearest-sample shift).
TracePair synthesize_traces(std::span<const SprayRecord> schedule, const ImpulseMatrix& m);

struct ParticleOptions {
    std::size_t particles = 1'000'000;   // per spray record
    std::uint64_t seed = 1;
    // Occupancy is averaged over `substeps` equally spaced instants centred
    // on each grid sample (1 = instantaneous count at the sample time). Odd.
    unsigned substeps = 1;
    unsigned workers = 0;                // 0 = hardware concurrency
};

struct ParticleResult {
    TracePair traces;
    std::uint64_t released = 0;
    std::uint64_t tracked_to_end = 0;    // must equal `released`
};

/// Monte-Carlo random walk of every released particle. Deterministic in
/// (schedule, params, seed, particles, substeps) regardless of `workers`.
ParticleResult simulate_particles(std::span<const SprayRecord> schedule, const Geometry2x2& g,
                                  const ChannelParams& p, const TimeGrid& grid,
                                  const ParticleOptions& opts);

/// Impulse matrix estimated by particle simulation. Samples past `horizon`
/// seconds (where the closed form has decayed to nothing) are left at zero.
ImpulseMatrix particle_impulse_matrix(const Geometry2x2& g, const ChannelParams& p,
                                      const TimeGrid& grid, const ParticleOptions& opts);

/// Time after which every closed-form link response stays below
/// `rel_floor` times its own peak.
double impulse_horizon(const Geometry2x2& g, const ChannelParams& p, double rel_floor = 1e-12);

/// Integral of the closed-form concentration over all space at time t,
/// by nested adaptive Simpson quadrature. Should equal Q.
double mass_integral(const ChannelParams& p, double t, double rel_tol = 1e-6);

/// CSV with header `t,rx0,rx1`.
void write_traces_csv(std::ostream& os, const TracePair& traces);

} // namespace molmimo
