#ifndef BUSTRACE_H
#define BUSTRACE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum {
  BT_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  BT_STATUS_NULL_ARGUMENT = 1,
  /**
   * An argument was rejected: bad length, non-finite value, wrong model mode, bad UTF-8.
   */
  BT_STATUS_INVALID_ARGUMENT = 2,
  /**
   * Reading a file failed.
   */
  BT_STATUS_IO = 3,
  /**
   * The model blob is corrupt, truncated or of another format version.
   */
  BT_STATUS_MODEL_FORMAT = 4,
  /**
   * The GTFS feed could not be parsed.
   */
  BT_STATUS_GTFS = 5,
  /**
   * The library panicked. This is a bug.
   */
  BT_STATUS_PANIC = 6,
} BtStatus;

/**
 * A parsed GTFS feed.
 */
typedef struct BtFeed BtFeed;

/**
 * A trained predictor loaded from a model file.
 */
typedef struct BtModel BtModel;

/**
 * Findings of a GTFS validation run.
 */
typedef struct BtReport BtReport;

/**
 * One `<lat, lon, speed>` reading: degrees, degrees, km/h.
 */
typedef struct {
  double lat;
  double lon;
  double speed;
} BtTuple;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null if none failed yet.
 *
 * The string stays valid until the next failing call on the same thread.
 */
const char *bt_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *bt_version(void);

/**
 * Load a model file written by `bustrace train`.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a writable pointer.
 */
BtStatus bt_model_load(const char *path, BtModel **out);

/**
 * Decode a model from an in-memory blob.
 *
 * # Safety
 * `bytes` must point to `len` readable bytes and `out` must be writable.
 */
BtStatus bt_model_from_bytes(const uint8_t *bytes, size_t len, BtModel **out);

/**
 * # Safety
 * `model` must come from `bt_model_load` or `bt_model_from_bytes` and not be
 * freed twice. Null is ignored.
 */
void bt_model_free(BtModel *model);

/**
 * Number of tuples a prediction window must hold, or 0 for a null handle.
 *
 * # Safety
 * `model` must be a live handle or null.
 */
size_t bt_model_window_len(const BtModel *model);

/**
 * Whether the model also classifies stops.
 *
 * # Safety
 * `model` must be a live handle or null.
 */
bool bt_model_is_stop_mode(const BtModel *model);

/**
 * Predict the reading that follows `window`.
 *
 * # Safety
 * `window` must point to `len` tuples and `out` must be writable.
 */
BtStatus bt_predict_next(const BtModel *model, const BtTuple *window, size_t len, BtTuple *out);

/**
 * Continue `window` for `steps` readings, feeding each prediction back in.
 *
 * # Safety
 * `window` must point to `len` tuples and `out` to room for `steps` tuples.
 */
BtStatus bt_rollout(const BtModel *model,
                    const BtTuple *window,
                    size_t len,
                    size_t steps,
                    BtTuple *out);

/**
 * Predicted next position of a stop-mode model and the probability that it is a stop.
 *
 * # Safety
 * `window` must point to `len` tuples; `location`, `probability` and `is_stop` must be writable.
 */
BtStatus bt_predict_stop(const BtModel *model,
                         const BtTuple *window,
                         size_t len,
                         BtTuple *location,
                         double *probability,
                         bool *is_stop);

/**
 * Parse a GTFS feed from a directory or a zip archive.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a writable pointer.
 */
BtStatus bt_feed_load(const char *path, BtFeed **out);

/**
 * # Safety
 * `feed` must come from `bt_feed_load` and not be freed twice. Null is ignored.
 */
void bt_feed_free(BtFeed *feed);

/**
 * Counts of the feed's tables, in file order: agency, stops, routes, trips, stop_times, calendar.
 *
 * # Safety
 * `feed` must be a live handle and `counts` must point to room for 6 values.
 */
BtStatus bt_feed_counts(const BtFeed *feed, size_t *counts);

/**
 * Check a feed against the GTFS reference rules.
 *
 * # Safety
 * `feed` must be a live handle and `out` a writable pointer.
 */
BtStatus bt_feed_validate(const BtFeed *feed, BtReport **out);

/**
 * # Safety
 * `report` must be a live handle or null.
 */
size_t bt_report_error_count(const BtReport *report);

/**
 * # Safety
 * `report` must be a live handle or null.
 */
size_t bt_report_warning_count(const BtReport *report);

/**
 * Whether any finding carries `rule`, e.g. `"FK_STOP"`.
 *
 * # Safety
 * `report` must be a live handle or null and `rule` a NUL-terminated string or null.
 */
bool bt_report_has_rule(const BtReport *report, const char *rule);

/**
 * Printable report, one finding per line. Owned by the report handle.
 *
 * # Safety
 * `report` must be a live handle or null.
 */
const char *bt_report_text(const BtReport *report);

/**
 * # Safety
 * `report` must come from `bt_feed_validate` and not be freed twice. Null is ignored.
 */
void bt_report_free(BtReport *report);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BUSTRACE_H */
