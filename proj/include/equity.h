/* C interface to the service-equity metrics engine. All functions are
 * synchronous; an engine must not be shared across threads without external
 * locking. Strings returned by the library stay valid until the next call on
 * the same engine (or, for eq_open_error, the next eq_engine_open on the
 * calling thread). */
#ifndef EQUITY_H
#define EQUITY_H

#ifdef __cplusplus
extern "C" {
#endif

typedef enum eq_status {
  EQ_OK = 0,
  EQ_ERROR_CONFIG = 1, /* bad configuration, option, or argument */
  EQ_ERROR_INPUT = 2,  /* malformed or inconsistent input data */
  EQ_ERROR_INTERNAL = 3
} eq_status;

typedef struct eq_engine eq_engine;

/* Library version, e.g. "0.1.0". */
const char* eq_version(void);

/* Opens an engine over a JSON run configuration. On failure *out stays null
 * and the reason is available from eq_open_error(). */
eq_status eq_engine_open(const char* config_path, eq_engine** out);

void eq_engine_close(eq_engine* engine);

/* Message of the most recent failure on this engine; "" if none. */
const char* eq_engine_last_error(const eq_engine* engine);

/* Message of the most recent eq_engine_open failure on this thread. */
const char* eq_open_error(void);

/* Reconfigures one option and resets cached stage results. Keys: output_dir,
 * strict_paper, longest_run_recovery, joint_hour_normalization (booleans as
 * "true"/"false"/"1"/"0"), threads, cluster_k, cluster_seed, initial_fill,
 * overlay_percentile. */
eq_status eq_engine_set_option(eq_engine* engine, const char* key, const char* value);

/* Runs one stage and writes its artifacts to the output directory. Stages:
 * ingest, availability, metrics, recovery, overlay, compare, cluster.
 * period is "before", "after", or NULL/"both"; overlay ignores it.
 * files_written may be NULL. */
eq_status eq_engine_run_stage(eq_engine* engine, const char* stage, const char* period,
                              int* files_written);

/* Full pipeline for both periods plus manifest.json. */
eq_status eq_engine_run_all(eq_engine* engine, int* files_written);

/* Before/after delta table for one layer (zeta, z, d_sp, sr, i_access,
 * zi_access). category is "commute" or "recreational" for the access layers,
 * NULL otherwise. hour selects one hour of an hourly layer; -1 compares the
 * 24-hour mean. */
eq_status eq_engine_diff(eq_engine* engine, const char* layer, const char* category, int hour,
                         int* files_written);

/* Reads one value from a computed layer. hour is 0..23 for hourly layers and
 * ignored otherwise. Marker zones without a value fail with EQ_ERROR_INPUT. */
eq_status eq_engine_layer_value(eq_engine* engine, const char* layer, const char* period,
                                const char* category, const char* zone_id, int hour,
                                double* out_value);

#ifdef __cplusplus
}
#endif

#endif /* EQUITY_H */
