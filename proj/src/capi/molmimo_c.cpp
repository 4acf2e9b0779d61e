// SPDX-License-Identifier: Apache-2.0
#include "molmimo/molmimo.h"

#include <cstdlib>
#include <cstring>
#include <memory>
#include <new>
#include <sstream>
#include <string>

#include "molmimo/config.hpp"
#include "molmimo/error.hpp"
#include "molmimo/harness.hpp"

struct molmimo_config {
    // Overrides accumulate here; the effective RunConfig is rebuilt from them
    // so that a mode change picks up that mode's calibrated defaults.
    molmimo::json overrides = molmimo::json::object();
    molmimo::RunConfig cfg = molmimo::RunConfig::defaults(molmimo::Mode::Mimo);
};

struct molmimo_report {
    molmimo::LinkRun run;
};

namespace {

thread_local std::string g_last_error;

molmimo_status set_error(molmimo_status s, std::string detail) {
    g_last_error = std::move(detail);
    return s;
}

template <class F>
molmimo_status guarded(F&& body) {
    try {
        g_last_error.clear();
        body();
        return MOLMIMO_OK;
    } catch (const molmimo::Error& e) {
        return set_error(static_cast<molmimo_status>(e.code()), e.what());
    } catch (const molmimo::json::exception& e) {
        return set_error(MOLMIMO_INVALID_CONFIG, e.what());
    } catch (const std::bad_alloc&) {
        return set_error(MOLMIMO_INTERNAL, "out of memory");
    } catch (const std::exception& e) {
        return set_error(MOLMIMO_INTERNAL, e.what());
    }
}

char* copy_out(const std::string& s) {
    char* p = static_cast<char*>(std::malloc(s.size() + 1));
    if (!p) throw std::bad_alloc();
    std::memcpy(p, s.c_str(), s.size() + 1);
    return p;
}

void rebuild(molmimo_config& c) {
    molmimo::RunConfig next = molmimo::config_from_json(c.overrides);
    next.validate();
    c.cfg = std::move(next);
}

// Merges `patch` into the override object, one level deep for nested sections.
void merge(molmimo::json& into, const molmimo::json& patch) {
    if (!patch.is_object()) molmimo::fail(molmimo::ErrorCode::InvalidConfig, "config must be a JSON object");
    for (const auto& [k, v] : patch.items()) {
        if (v.is_object() && into.contains(k) && into[k].is_object())
            into[k].update(v);
        else
            into[k] = v;
    }
}

molmimo_status set_override(molmimo_config* cfg, const char* key, molmimo::json value) {
    if (!cfg) return set_error(MOLMIMO_NULL_ARGUMENT, "config is null");
    return guarded([&] {
        molmimo::json next = cfg->overrides;
        next[key] = std::move(value);
        molmimo_config trial{next, cfg->cfg};
        rebuild(trial);
        *cfg = std::move(trial);
    });
}

} // namespace

extern "C" {

const char* molmimo_version(void) { return "1.0.0"; }

const char* molmimo_status_string(molmimo_status s) {
    switch (s) {
    case MOLMIMO_OK: return "ok";
    case MOLMIMO_INVALID_TIME: return "invalid_time";
    case MOLMIMO_INVALID_PARAMETER: return "invalid_parameter";
    case MOLMIMO_DEGENERATE_GEOMETRY: return "degenerate_geometry";
    case MOLMIMO_INVALID_PARTICLE_COUNT: return "invalid_particle_count";
    case MOLMIMO_SCHEDULE_OUT_OF_RANGE: return "schedule_out_of_range";
    case MOLMIMO_GRID_MISMATCH: return "grid_mismatch";
    case MOLMIMO_NO_START_INDICATOR: return "no_start_indicator";
    case MOLMIMO_PREAMBLE_NOT_DETECTED: return "preamble_not_detected";
    case MOLMIMO_TRACE_TOO_SHORT: return "trace_too_short";
    case MOLMIMO_UNSUPPORTED_CHARACTER: return "unsupported_character";
    case MOLMIMO_EMPTY_MESSAGE: return "empty_message";
    case MOLMIMO_MISSING_END_INDICATOR: return "missing_end_indicator";
    case MOLMIMO_MALFORMED_STREAM: return "malformed_stream";
    case MOLMIMO_INVALID_SWEEP: return "invalid_sweep";
    case MOLMIMO_INVALID_CONFIG: return "invalid_config";
    case MOLMIMO_NOT_FOUND: return "not_found";
    case MOLMIMO_CONFLICT: return "conflict";
    case MOLMIMO_IO: return "io";
    case MOLMIMO_INTERNAL: return "internal";
    case MOLMIMO_NULL_ARGUMENT: return "null_argument";
    }
    return "unknown";
}

const char* molmimo_last_error(void) { return g_last_error.c_str(); }

void molmimo_string_free(char* s) { std::free(s); }

molmimo_status molmimo_config_new(const char* mode, molmimo_config** out) {
    if (!out) return set_error(MOLMIMO_NULL_ARGUMENT, "out is null");
    *out = nullptr;
    return guarded([&] {
        auto c = std::make_unique<molmimo_config>();
        if (mode) c->overrides["mode"] = mode;
        rebuild(*c);
        *out = c.release();
    });
}

molmimo_status molmimo_config_from_json(const char* text, molmimo_config** out) {
    if (!out || !text) return set_error(MOLMIMO_NULL_ARGUMENT, "json or out is null");
    *out = nullptr;
    return guarded([&] {
        auto c = std::make_unique<molmimo_config>();
        merge(c->overrides, molmimo::json::parse(text));
        rebuild(*c);
        *out = c.release();
    });
}

molmimo_status molmimo_config_apply_json(molmimo_config* cfg, const char* text) {
    if (!cfg || !text) return set_error(MOLMIMO_NULL_ARGUMENT, "config or json is null");
    return guarded([&] {
        molmimo_config trial = *cfg;
        merge(trial.overrides, molmimo::json::parse(text));
        rebuild(trial);
        *cfg = std::move(trial);
    });
}

molmimo_status molmimo_config_set_mode(molmimo_config* cfg, const char* mode) {
    if (!mode) return set_error(MOLMIMO_NULL_ARGUMENT, "mode is null");
    return set_override(cfg, "mode", mode);
}

molmimo_status molmimo_config_set_message(molmimo_config* cfg, const char* message) {
    if (!message) return set_error(MOLMIMO_NULL_ARGUMENT, "message is null");
    return set_override(cfg, "message", message);
}

molmimo_status molmimo_config_set_seed(molmimo_config* cfg, uint64_t seed) { return set_override(cfg, "seed", seed); }

molmimo_status molmimo_config_set_backend(molmimo_config* cfg, const char* backend) {
    if (!backend) return set_error(MOLMIMO_NULL_ARGUMENT, "backend is null");
    return set_override(cfg, "backend", backend);
}

molmimo_status molmimo_config_set_particles(molmimo_config* cfg, uint64_t particles) {
    return set_override(cfg, "particles", particles);
}

molmimo_status molmimo_config_set_noise(molmimo_config* cfg, double sigma) {
    if (!cfg) return set_error(MOLMIMO_NULL_ARGUMENT, "config is null");
    molmimo::json sensor = cfg->overrides.value("sensor", molmimo::json::object());
    sensor["noise"] = sigma;
    return set_override(cfg, "sensor", std::move(sensor));
}

molmimo_status molmimo_config_to_json(const molmimo_config* cfg, char** out) {
    if (!cfg || !out) return set_error(MOLMIMO_NULL_ARGUMENT, "config or out is null");
    return guarded([&] { *out = copy_out(molmimo::dump(molmimo::to_json(cfg->cfg))); });
}

void molmimo_config_free(molmimo_config* cfg) { delete cfg; }

molmimo_status molmimo_run(const molmimo_config* cfg, molmimo_report** out) {
    if (!cfg || !out) return set_error(MOLMIMO_NULL_ARGUMENT, "config or out is null");
    *out = nullptr;
    return guarded([&] { *out = new molmimo_report{molmimo::run_link_detailed(cfg->cfg)}; });
}

molmimo_status molmimo_report_json(const molmimo_report* r, char** out) {
    if (!r || !out) return set_error(MOLMIMO_NULL_ARGUMENT, "report or out is null");
    return guarded([&] { *out = copy_out(molmimo::dump(molmimo::to_json(r->run.report))); });
}

molmimo_status molmimo_report_slots_csv(const molmimo_report* r, char** out) {
    if (!r || !out) return set_error(MOLMIMO_NULL_ARGUMENT, "report or out is null");
    return guarded([&] {
        std::ostringstream os;
        molmimo::write_slot_csv(os, r->run.report.slots);
        *out = copy_out(os.str());
    });
}

molmimo_status molmimo_report_traces_csv(const molmimo_report* r, char** out) {
    if (!r || !out) return set_error(MOLMIMO_NULL_ARGUMENT, "report or out is null");
    return guarded([&] {
        std::ostringstream os;
        molmimo::write_traces_csv(os, r->run.concentration);
        *out = copy_out(os.str());
    });
}

double molmimo_report_data_rate(const molmimo_report* r) { return r ? r->run.report.data_rate : 0.0; }

double molmimo_report_ber(const molmimo_report* r) { return r ? r->run.report.ber() : 0.0; }

void molmimo_report_free(molmimo_report* r) { delete r; }

molmimo_status molmimo_compare(const molmimo_config* cfg, char** out_json) {
    if (!cfg || !out_json) return set_error(MOLMIMO_NULL_ARGUMENT, "config or out is null");
    return guarded([&] {
        molmimo::json shared = cfg->overrides;
        shared.erase("mode");
        const auto cmp = molmimo::compare_modes(cfg->cfg.message, cfg->cfg.seed,
                                                [&](molmimo::RunConfig& c) { molmimo::apply_overrides(c, shared); });
        *out_json = copy_out(molmimo::dump(molmimo::to_json(cmp)));
    });
}

molmimo_status molmimo_validate_channel(uint64_t particles, uint64_t seed, unsigned seeds, unsigned substeps,
                                        char** out_json, int* passed) {
    if (!out_json) return set_error(MOLMIMO_NULL_ARGUMENT, "out is null");
    return guarded([&] {
        const auto v = molmimo::validate_channel(particles, seed, seeds, substeps);
        *out_json = copy_out(molmimo::dump(molmimo::to_json(v)));
        if (passed) *passed = v.peak_ok && v.mass_ok;
    });
}

molmimo_status molmimo_sweep(const molmimo_config* cfg, const double* levels, size_t count, unsigned reps,
                             char** out_csv) {
    if (!cfg || !out_csv || (count && !levels)) return set_error(MOLMIMO_NULL_ARGUMENT, "null argument");
    return guarded([&] {
        const auto rows = molmimo::sweep_noise(std::span(levels, count), reps, cfg->cfg);
        std::ostringstream os;
        molmimo::write_sweep_csv(os, rows);
        *out_csv = copy_out(os.str());
    });
}

} // extern "C"
