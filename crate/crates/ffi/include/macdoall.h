#ifndef MACDOALL_H
#define MACDOALL_H

/* Generated by cbindgen. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum MacdoallStatus {
  MACDOALL_STATUS_OK = 0,
  MACDOALL_STATUS_NULL_POINTER = 1,
  MACDOALL_STATUS_INVALID_UTF8 = 2,
  MACDOALL_STATUS_CONFIG_ERROR = 3,
  MACDOALL_STATUS_ENGINE_ERROR = 4,
  MACDOALL_STATUS_NOT_FINISHED = 5,
  MACDOALL_STATUS_PANIC = 6,
} MacdoallStatus;

/**
 * A crash order.
 */
typedef struct MacdoallPoset MacdoallPoset;

/**
 * A simulation built from a JSON run config.
 */
typedef struct MacdoallSim MacdoallSim;

typedef struct MacdoallMetrics {
  uint64_t work;
  uint64_t time;
  uint64_t energy;
} MacdoallMetrics;

/**
 * Last error message on this thread, or null. Valid until the next failing
 * call on the same thread; do not free.
 */
const char *macdoall_last_error(void);

/**
 * Library version as a static string; do not free.
 */
const char *macdoall_version(void);

/**
 * Frees a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void macdoall_string_free(char *s);

/**
 * Builds a simulation from a JSON run config.
 *
 * # Safety
 * `config_json` must be a valid C string; `out` must be writable.
 */
enum MacdoallStatus macdoall_sim_new(const char *config_json, struct MacdoallSim **out);

/**
 * Runs one round. `*running` becomes false once the run is over.
 *
 * # Safety
 * `sim` must be a live handle; `running` must be writable.
 */
enum MacdoallStatus macdoall_sim_step(struct MacdoallSim *sim, bool *running);

/**
 * Runs to completion and writes the metrics.
 *
 * # Safety
 * `sim` must be a live handle; `metrics` may be null.
 */
enum MacdoallStatus macdoall_sim_run(struct MacdoallSim *sim, struct MacdoallMetrics *metrics);

/**
 * Current metrics, whether or not the run is over.
 *
 * # Safety
 * `sim` must be a live handle; `metrics` must be writable.
 */
enum MacdoallStatus macdoall_sim_metrics(const struct MacdoallSim *sim,
                                         struct MacdoallMetrics *metrics);

/**
 * Whether the finished run passed the reliability check.
 *
 * # Safety
 * `sim` must be a live handle; `reliable` must be writable.
 */
enum MacdoallStatus macdoall_sim_reliable(const struct MacdoallSim *sim, bool *reliable);

/**
 * The finished trace as JSON lines, one round per line.
 *
 * # Safety
 * `sim` must be a live handle; `out` must be writable. Free the result with
 * [`macdoall_string_free`].
 */
enum MacdoallStatus macdoall_sim_trace_jsonl(const struct MacdoallSim *sim, char **out);

/**
 * # Safety
 * `sim` must be null or a handle from [`macdoall_sim_new`] not yet freed.
 */
void macdoall_sim_free(struct MacdoallSim *sim);

/**
 * Parses a poset file (explicit literal, or family literal with `size`).
 *
 * # Safety
 * `json` must be a valid C string; `out` must be writable.
 */
enum MacdoallStatus macdoall_poset_new(const char *json, struct MacdoallPoset **out);

/**
 * Size of a maximum antichain.
 *
 * # Safety
 * `poset` must be a live handle; `thickness` must be writable.
 */
enum MacdoallStatus macdoall_poset_thickness(const struct MacdoallPoset *poset, size_t *thickness);

/**
 * Width, antichain and chain cover as a JSON object.
 *
 * # Safety
 * `poset` must be a live handle; `out` must be writable. Free the result
 * with [`macdoall_string_free`].
 */
enum MacdoallStatus macdoall_poset_summary_json(const struct MacdoallPoset *poset, char **out);

/**
 * # Safety
 * `poset` must be null or a handle from [`macdoall_poset_new`] not yet freed.
 */
void macdoall_poset_free(struct MacdoallPoset *poset);

#endif /* MACDOALL_H */
