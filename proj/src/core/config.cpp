// SPDX-License-Identifier: Apache-2.0
#include "molmimo/config.hpp"

#include <initializer_list>
#include <string_view>

#include "molmimo/error.hpp"

namespace molmimo {

namespace {

void require_object(const json& j, std::string_view where) {
    if (!j.is_object()) fail(ErrorCode::InvalidConfig, std::string(where) + " must be a JSON object");
}

void reject_unknown(const json& j, std::string_view where, std::initializer_list<std::string_view> known) {
    for (const auto& [key, _] : j.items()) {
        bool ok = false;
        for (auto k : known) ok = ok || key == k;
        if (!ok) fail(ErrorCode::InvalidConfig, "unknown key '" + key + "' in " + std::string(where));
    }
}

double number(const json& v, std::string_view key) {
    if (!v.is_number()) fail(ErrorCode::InvalidConfig, "'" + std::string(key) + "' must be a number");
    return v.get<double>();
}

std::uint64_t count(const json& v, std::string_view key) {
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
        fail(ErrorCode::InvalidConfig, "'" + std::string(key) + "' must be a non-negative integer");
    return v.get<std::uint64_t>();
}

Vec3 vec3(const json& v, std::string_view key) {
    if (!v.is_array() || v.size() != 3)
        fail(ErrorCode::InvalidConfig, "'" + std::string(key) + "' must be an array of three numbers");
    return {number(v[0], key), number(v[1], key), number(v[2], key)};
}

json vec3_json(const Vec3& v) { return json::array({v.x, v.y, v.z}); }

template <class F>
void with(const json& j, const char* key, F&& apply) {
    if (auto it = j.find(key); it != j.end()) apply(*it);
}

} // namespace

void apply_overrides(RunConfig& cfg, const json& o) {
    require_object(o, "config");
    reject_unknown(o, "config",
                   {"mode", "message", "seed", "backend", "particles", "mc_substeps", "workers", "cancel_ili",
                    "tx_start", "channel", "geometry", "timing", "sensor", "detection"});

    with(o, "mode", [&](const json& v) {
        if (!v.is_string()) fail(ErrorCode::InvalidConfig, "'mode' must be a string");
        const Mode m = parse_mode(v.get<std::string>());
        if (m != cfg.mode) cfg.timing.symbol_period = RunConfig::defaults(m).timing.symbol_period;
        cfg.mode = m;
    });
    with(o, "message", [&](const json& v) {
        if (!v.is_string()) fail(ErrorCode::InvalidConfig, "'message' must be a string");
        cfg.message = v.get<std::string>();
    });
    with(o, "seed", [&](const json& v) { cfg.seed = count(v, "seed"); });
    with(o, "backend", [&](const json& v) {
        if (!v.is_string()) fail(ErrorCode::InvalidConfig, "'backend' must be a string");
        cfg.backend = parse_backend(v.get<std::string>());
    });
    with(o, "particles", [&](const json& v) { cfg.particles = count(v, "particles"); });
    with(o, "mc_substeps", [&](const json& v) { cfg.mc_substeps = static_cast<unsigned>(count(v, "mc_substeps")); });
    with(o, "workers", [&](const json& v) { cfg.workers = static_cast<unsigned>(count(v, "workers")); });
    with(o, "cancel_ili", [&](const json& v) {
        if (!v.is_boolean()) fail(ErrorCode::InvalidConfig, "'cancel_ili' must be a boolean");
        cfg.cancel_ili = v.get<bool>();
    });
    with(o, "tx_start", [&](const json& v) { cfg.tx_start = number(v, "tx_start"); });

    with(o, "channel", [&](const json& c) {
        require_object(c, "channel");
        reject_unknown(c, "channel", {"diffusivity", "drift", "molecules_per_burst", "burst_duration"});
        with(c, "diffusivity", [&](const json& v) { cfg.channel.diffusivity = number(v, "diffusivity"); });
        with(c, "drift", [&](const json& v) { cfg.channel.drift = vec3(v, "drift"); });
        with(c, "molecules_per_burst",
             [&](const json& v) { cfg.channel.molecules_per_burst = number(v, "molecules_per_burst"); });
        with(c, "burst_duration", [&](const json& v) { cfg.channel.burst_duration = number(v, "burst_duration"); });
    });
    with(o, "geometry", [&](const json& g) {
        require_object(g, "geometry");
        reject_unknown(g, "geometry", {"tx", "rx", "capture_radius"});
        auto pair = [](const json& v, const char* key, std::array<Vec3, 2>& out) {
            if (!v.is_array() || v.size() != 2)
                fail(ErrorCode::InvalidConfig, std::string("'") + key + "' must hold two positions");
            out = {vec3(v[0], key), vec3(v[1], key)};
        };
        with(g, "tx", [&](const json& v) { pair(v, "tx", cfg.geometry.tx); });
        with(g, "rx", [&](const json& v) { pair(v, "rx", cfg.geometry.rx); });
        with(g, "capture_radius", [&](const json& v) { cfg.geometry.capture_radius = number(v, "capture_radius"); });
    });
    with(o, "timing", [&](const json& t) {
        require_object(t, "timing");
        reject_unknown(t, "timing", {"symbol_period", "preamble_slots", "guard", "overhead"});
        with(t, "symbol_period", [&](const json& v) { cfg.timing.symbol_period = number(v, "symbol_period"); });
        with(t, "preamble_slots", [&](const json& v) { cfg.timing.preamble_slots = count(v, "preamble_slots"); });
        with(t, "guard", [&](const json& v) { cfg.timing.guard = number(v, "guard"); });
        with(t, "overhead", [&](const json& v) { cfg.timing.overhead = number(v, "overhead"); });
    });
    with(o, "sensor", [&](const json& s) {
        require_object(s, "sensor");
        reject_unknown(s, "sensor", {"gain", "response_time", "noise", "saturation", "sample_rate"});
        with(s, "gain", [&](const json& v) { cfg.sensor.gain = number(v, "gain"); });
        with(s, "response_time", [&](const json& v) { cfg.sensor.response_time = number(v, "response_time"); });
        with(s, "noise", [&](const json& v) { cfg.sensor.noise = number(v, "noise"); });
        with(s, "saturation", [&](const json& v) { cfg.sensor.saturation = number(v, "saturation"); });
        with(s, "sample_rate", [&](const json& v) { cfg.sensor.sample_rate = number(v, "sample_rate"); });
    });
    with(o, "detection", [&](const json& d) {
        require_object(d, "detection");
        reject_unknown(d, "detection", {"threshold_fraction", "noise_floor"});
        with(d, "threshold_fraction",
             [&](const json& v) { cfg.detection.threshold_fraction = number(v, "threshold_fraction"); });
        with(d, "noise_floor", [&](const json& v) { cfg.detection.noise_floor = number(v, "noise_floor"); });
    });
}

RunConfig config_from_json(const json& j) {
    require_object(j, "config");
    Mode mode = Mode::Mimo;
    if (auto it = j.find("mode"); it != j.end() && it->is_string()) mode = parse_mode(it->get<std::string>());
    RunConfig cfg = RunConfig::defaults(mode);
    apply_overrides(cfg, j);
    return cfg;
}

json to_json(const RunConfig& c) {
    return {
        {"mode", mode_name(c.mode)},
        {"message", c.message},
        {"seed", c.seed},
        {"backend", backend_name(c.backend)},
        {"particles", c.particles},
        {"mc_substeps", c.mc_substeps},
        {"workers", c.workers},
        {"cancel_ili", c.cancel_ili},
        {"tx_start", c.tx_start},
        {"channel",
         {{"diffusivity", c.channel.diffusivity},
          {"drift", vec3_json(c.channel.drift)},
          {"molecules_per_burst", c.channel.molecules_per_burst},
          {"burst_duration", c.channel.burst_duration}}},
        {"geometry",
         {{"tx", json::array({vec3_json(c.geometry.tx[0]), vec3_json(c.geometry.tx[1])})},
          {"rx", json::array({vec3_json(c.geometry.rx[0]), vec3_json(c.geometry.rx[1])})},
          {"capture_radius", c.geometry.capture_radius}}},
        {"timing",
         {{"symbol_period", c.timing.symbol_period},
          {"preamble_slots", c.timing.preamble_slots},
          {"guard", c.timing.guard},
          {"overhead", c.timing.overhead}}},
        {"sensor",
         {{"gain", c.sensor.gain},
          {"response_time", c.sensor.response_time},
          {"noise", c.sensor.noise},
          {"saturation", c.sensor.saturation},
          {"sample_rate", c.sensor.sample_rate}}},
        {"detection",
         {{"threshold_fraction", c.detection.threshold_fraction}, {"noise_floor", c.detection.noise_floor}}},
    };
}

json to_json(const LinkReport& r) {
    json slots = json::array();
    for (const auto& s : r.slots)
        slots.push_back({{"rx", s.rx}, {"slot", s.slot}, {"statistic", s.statistic}, {"threshold", s.threshold},
                         {"bit", s.bit}});
    json j = {
        {"mode", mode_name(r.mode)},
        {"backend", r.backend},
        {"seed", r.seed},
        {"message_sent", r.message_sent},
        {"message_decoded", r.message_decoded},
        {"decoded_per_rx", r.decoded_per_rx},
        {"air_time_s", r.air_time},
        {"payload_bits", r.payload_bits},
        {"data_rate_bps", r.data_rate},
        {"data_rate_raw_bps", r.data_rate_raw},
        {"bit_errors", r.bit_errors},
        {"compared_bits", r.compared_bits},
        {"char_errors", r.char_errors},
        {"frame_start_s", r.frame_start},
        {"truncated", r.truncated},
        {"slots", std::move(slots)},
    };
    j["ili_gains"] = r.gains ? json{{"a01", r.gains->a01}, {"a10", r.gains->a10}} : json(nullptr);
    j["sync_failure"] = r.sync_failure.empty() ? json(nullptr) : json(r.sync_failure);
    return j;
}

json to_json(const ComparisonReport& c) {
    return {{"siso", to_json(c.siso)}, {"mimo", to_json(c.mimo)}, {"rate_ratio", c.rate_ratio}};
}

json to_json(const ChannelValidation& v) {
    return {
        {"particles", v.particles},
        {"substeps", v.substeps},
        {"analytic_peak", v.analytic_peak},
        {"analytic_peak_time_s", v.analytic_peak_time},
        {"mc_peaks", v.mc_peaks},
        {"relative_errors", v.relative_errors},
        {"median_relative_error", v.median_relative_error},
        {"mass_time_s", v.mass_time},
        {"mass_ratio", v.mass_ratio},
        {"peak_ok", v.peak_ok},
        {"mass_ok", v.mass_ok},
    };
}

std::string dump(const json& j) { return j.dump(); }

} // namespace molmimo
