/* SPDX-License-Identifier: Apache-2.0 */
/* C interface to the molecular MIMO link simulator.
 *
 * Every call returns a molmimo_status. On failure, molmimo_last_error() gives
 * a human-readable detail for the calling thread. Strings returned through
 * `char**` out-parameters are owned by the caller and released with
 * molmimo_string_free(). */
#ifndef MOLMIMO_H
#define MOLMIMO_H

#include <stddef.h>
#include <stdint.h>

#if defined(MOLMIMO_BUILDING)
#define MOLMIMO_API __attribute__((visibility("default")))
#else
#define MOLMIMO_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum molmimo_status {
    MOLMIMO_OK = 0,
    MOLMIMO_INVALID_TIME = 1,
    MOLMIMO_INVALID_PARAMETER = 2,
    MOLMIMO_DEGENERATE_GEOMETRY = 3,
    MOLMIMO_INVALID_PARTICLE_COUNT = 4,
    MOLMIMO_SCHEDULE_OUT_OF_RANGE = 5,
    MOLMIMO_GRID_MISMATCH = 6,
    MOLMIMO_NO_START_INDICATOR = 7,
    MOLMIMO_PREAMBLE_NOT_DETECTED = 8,
    MOLMIMO_TRACE_TOO_SHORT = 9,
    MOLMIMO_UNSUPPORTED_CHARACTER = 10,
    MOLMIMO_EMPTY_MESSAGE = 11,
    MOLMIMO_MISSING_END_INDICATOR = 12,
    MOLMIMO_MALFORMED_STREAM = 13,
    MOLMIMO_INVALID_SWEEP = 14,
    MOLMIMO_INVALID_CONFIG = 15,
    MOLMIMO_NOT_FOUND = 16,
    MOLMIMO_CONFLICT = 17,
    MOLMIMO_IO = 18,
    MOLMIMO_INTERNAL = 19,
    MOLMIMO_NULL_ARGUMENT = 20
} molmimo_status;

typedef struct molmimo_config molmimo_config;
typedef struct molmimo_report molmimo_report;

MOLMIMO_API const char* molmimo_version(void);
/* Stable snake_case name of a status, e.g. "unsupported_character". */
MOLMIMO_API const char* molmimo_status_string(molmimo_status status);
/* Detail of the most recent failure on this thread; "" if none. */
MOLMIMO_API const char* molmimo_last_error(void);
MOLMIMO_API void molmimo_string_free(char* s);

/* Calibrated defaults for `mode` ("siso" or "mimo"; NULL means mimo). */
MOLMIMO_API molmimo_status molmimo_config_new(const char* mode, molmimo_config** out);
/* Defaults plus a JSON object of overrides. Unknown keys are rejected. */
MOLMIMO_API molmimo_status molmimo_config_from_json(const char* json, molmimo_config** out);
/* Merges further overrides into an existing configuration. */
MOLMIMO_API molmimo_status molmimo_config_apply_json(molmimo_config* cfg, const char* json);
MOLMIMO_API molmimo_status molmimo_config_set_mode(molmimo_config* cfg, const char* mode);
MOLMIMO_API molmimo_status molmimo_config_set_message(molmimo_config* cfg, const char* message);
MOLMIMO_API molmimo_status molmimo_config_set_seed(molmimo_config* cfg, uint64_t seed);
MOLMIMO_API molmimo_status molmimo_config_set_backend(molmimo_config* cfg, const char* backend);
MOLMIMO_API molmimo_status molmimo_config_set_particles(molmimo_config* cfg, uint64_t particles);
MOLMIMO_API molmimo_status molmimo_config_set_noise(molmimo_config* cfg, double sigma_volts);
/* Full effective configuration as JSON. */
MOLMIMO_API molmimo_status molmimo_config_to_json(const molmimo_config* cfg, char** out);
MOLMIMO_API void molmimo_config_free(molmimo_config* cfg);

/* One end-to-end transmission. Receiver sync failures are part of the
 * report, not an error status. */
MOLMIMO_API molmimo_status molmimo_run(const molmimo_config* cfg, molmimo_report** out);
MOLMIMO_API molmimo_status molmimo_report_json(const molmimo_report* r, char** out);
/* rx,slot,statistic,threshold,bit */
MOLMIMO_API molmimo_status molmimo_report_slots_csv(const molmimo_report* r, char** out);
/* t,rx0,rx1 in molecules/m^3 */
MOLMIMO_API molmimo_status molmimo_report_traces_csv(const molmimo_report* r, char** out);
MOLMIMO_API double molmimo_report_data_rate(const molmimo_report* r);
MOLMIMO_API double molmimo_report_ber(const molmimo_report* r);
MOLMIMO_API void molmimo_report_free(molmimo_report* r);

/* Same message and seed in both modes; the configuration's other overrides
 * apply to both, except "mode". Writes {siso, mimo, rate_ratio}. */
MOLMIMO_API molmimo_status molmimo_compare(const molmimo_config* cfg, char** out_json);

/* Particle channel against the closed form. `passed` receives 1 when both
 * the peak and the mass checks hold. */
MOLMIMO_API molmimo_status molmimo_validate_channel(uint64_t particles, uint64_t seed, unsigned seeds,
                                                    unsigned substeps, char** out_json, int* passed);

/* Noise sweep; levels are fractions of the nominal signal rise. Writes
 * CSV `sigma,mode,ber,cer`. */
MOLMIMO_API molmimo_status molmimo_sweep(const molmimo_config* cfg, const double* levels, size_t count,
                                         unsigned reps, char** out_csv);

#ifdef __cplusplus
}
#endif

#endif /* MOLMIMO_H */
