#ifndef TILENOC_H
#define TILENOC_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every call.
 */
typedef enum TncStatus {
  TNC_STATUS_OK = 0,
  TNC_STATUS_NULL_ARGUMENT = 1,
  TNC_STATUS_INVALID_UTF8 = 2,
  /**
   * Unknown scheme, format or index.
   */
  TNC_STATUS_BAD_ARGUMENT = 3,
  /**
   * The workload could not be read, parsed or validated.
   */
  TNC_STATUS_VALIDATION = 4,
  /**
   * A simulator failed or a result check did not hold.
   */
  TNC_STATUS_SIMULATION = 5,
  /**
   * An internal panic was caught at the boundary.
   */
  TNC_STATUS_INTERNAL = 6,
} TncStatus;

typedef enum TncFormat {
  TNC_FORMAT_CSV = 0,
  TNC_FORMAT_JSON = 1,
  TNC_FORMAT_TABLE = 2,
} TncFormat;

/**
 * Results of a comparison or ablation run.
 */
typedef struct TncReport TncReport;

/**
 * A parsed workload file.
 */
typedef struct TncWorkload TncWorkload;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. Owned by the
 * library and valid until the next call on the same thread.
 */
const char *tnc_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *tnc_version(void);

/**
 * Parse workload text.
 *
 * # Safety
 * `text` must be a NUL-terminated string and `out` a valid pointer.
 */
enum TncStatus tnc_workload_parse(const char *text, struct TncWorkload **out);

/**
 * Read and parse a workload file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum TncStatus tnc_workload_load(const char *path, struct TncWorkload **out);

/**
 * Number of layers in the workload.
 *
 * # Safety
 * `w` must come from `tnc_workload_parse` or `tnc_workload_load`.
 */
size_t tnc_workload_layer_count(const struct TncWorkload *w);

/**
 * # Safety
 * `w` must be null or a handle not yet freed.
 */
void tnc_workload_free(struct TncWorkload *w);

/**
 * Run every (wire width, scheme) cell.
 *
 * `widths` may be null with `n_widths == 0` to use the file's own list.
 * `schemes` is a comma-separated subset of `tdm,dor,xyyx,romm,mad`, or null
 * for all of them.
 *
 * # Safety
 * `w` must be a live workload handle, `widths` must point at `n_widths`
 * values, `schemes` must be null or NUL-terminated, `out` must be valid.
 */
enum TncStatus tnc_compare(const struct TncWorkload *w,
                           const uint32_t *widths,
                           size_t n_widths,
                           const char *schemes,
                           uint64_t seed,
                           struct TncReport **out);

/**
 * Run the ablation ladder at one wire width.
 *
 * # Safety
 * `w` must be a live workload handle and `out` a valid pointer.
 */
enum TncStatus tnc_ablate(const struct TncWorkload *w,
                          uint32_t wire_width,
                          uint64_t seed,
                          struct TncReport **out);

/**
 * Rows in the report: cells for a comparison, stages for an ablation.
 *
 * # Safety
 * `r` must be null or a live report handle.
 */
size_t tnc_report_len(const struct TncReport *r);

/**
 * Mean bounded ratio of comparison cell `index`.
 *
 * # Safety
 * `r` must be a live report handle and `out` a valid pointer.
 */
enum TncStatus tnc_report_mean_bounded_ratio(const struct TncReport *r, size_t index, double *out);

/**
 * Total communication latency of row `index`, in cycles.
 *
 * # Safety
 * `r` must be a live report handle and `out` a valid pointer.
 */
enum TncStatus tnc_report_comm_latency(const struct TncReport *r, size_t index, uint64_t *out);

/**
 * Render the report. The string must be released with `tnc_string_free`.
 *
 * # Safety
 * `r` must be a live report handle and `out` a valid pointer.
 */
enum TncStatus tnc_report_render(const struct TncReport *r, enum TncFormat format, char **out);

/**
 * Per-tile CSV of a comparison report.
 *
 * # Safety
 * `r` must be a live report handle and `out` a valid pointer.
 */
enum TncStatus tnc_report_tiles_csv(const struct TncReport *r, char **out);

/**
 * # Safety
 * `r` must be null or a handle not yet freed.
 */
void tnc_report_free(struct TncReport *r);

/**
 * # Safety
 * `s` must be null or a string returned by this library and not yet freed.
 */
void tnc_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TILENOC_H */
