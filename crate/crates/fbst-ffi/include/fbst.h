#ifndef FBST_H
#define FBST_H

/* Generated by cbindgen from fbst-ffi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Opaque evaluation report handle.
 */
typedef struct FbstReport FbstReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Run the full pipeline on a JSON spec document. Returns a report handle,
 * or null on failure (see `fbst_last_error`).
 *
 * # Safety
 * `spec_json` must be a valid NUL-terminated UTF-8 string.
 */
struct FbstReport *fbst_run_test(const char *spec_json);

/**
 * Serialize a report to a JSON string owned by the library. Free it with
 * `fbst_string_free`. Returns null if `report` is null.
 *
 * # Safety
 * `report` must be a handle from `fbst_run_test` that has not been freed.
 */
char *fbst_report_json(const struct FbstReport *report);

/**
 * The e-value of a report; NaN if `report` is null.
 *
 * # Safety
 * `report` must be a live handle from `fbst_run_test`.
 */
double fbst_report_evalue(const struct FbstReport *report);

/**
 * Release a report handle. Null is a no-op.
 *
 * # Safety
 * `report` must be a handle from `fbst_run_test`, freed at most once.
 */
void fbst_report_free(struct FbstReport *report);

/**
 * Release a string produced by this library. Null is a no-op.
 *
 * # Safety
 * `s` must come from `fbst_report_json` or `fbst_last_error_take`, freed at
 * most once.
 */
void fbst_string_free(char *s);

/**
 * QQ(t, h, c) confidence transform. Writes the value through `out` and
 * returns 0, or returns a nonzero error code leaving `out` untouched.
 *
 * # Safety
 * `out` must point to writable memory for one double.
 */
int fbst_qq(uint32_t t, uint32_t h, double c, double *out);

/**
 * The most recent error message on this thread, or null if none. The
 * returned string is owned by the caller; free with `fbst_string_free`.
 */
char *fbst_last_error_take(void);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* FBST_H */
