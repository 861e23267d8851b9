/* C ABI for the operator-valued free probability engine. */

#ifndef OVFP_H
#define OVFP_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Status codes returned by every fallible entry point.  The first three
// mirror the process exit codes of the command-line runner.
typedef enum OvfpStatus {
  // The task ran and every check passed.
  OVFP_STATUS_OK = 0,
  // The task ran and a mathematical check failed.
  OVFP_STATUS_VERIFICATION_FAILED = 1,
  // The scenario never ran: unreadable file, schema violation, or
  // invalid construction.
  OVFP_STATUS_CONFIG_ERROR = 2,
  // A required pointer argument was null.
  OVFP_STATUS_NULL_ARGUMENT = 3,
  // An internal invariant broke; the library state is still sound.
  OVFP_STATUS_INTERNAL_ERROR = 4,
} OvfpStatus;

// Opaque handle to a finished scenario report.
typedef struct OvfpReport OvfpReport;

// Optional overrides applied on top of the scenario file, mirroring the
// command-line flags.  Pass NULL for "no overrides".
typedef struct OvfpOverrides {
  // Maximum word degree; negative keeps the scenario's value.
  int32_t maxdeg;
  // Numerical tolerance; zero, negative, or NaN keeps the scenario's
  // value.
  double tol;
  // Nonzero to replace the scenario's random seed with `seed`.
  int has_seed;
  uint64_t seed;
} OvfpOverrides;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Run the scenario file at `path` (NUL-terminated UTF-8) and hand back a
// report through `out_report`.  A report is produced whenever the status
// is `OK`, `VERIFICATION_FAILED`, or `CONFIG_ERROR`; on `NULL_ARGUMENT`
// or `INTERNAL_ERROR` the output pointer is left untouched.
//
// # Safety
// `path` must point to a NUL-terminated string and `out_report` to a
// writable pointer slot; `overrides` may be null.
enum OvfpStatus ovfp_run_scenario(const char *path,
                                  const struct OvfpOverrides *overrides,
                                  struct OvfpReport **out_report);

// 1 if every check in the report passed, 0 if not, -1 on a null handle.
//
// # Safety
// `report` must be null or a live handle from [`ovfp_run_scenario`].
int ovfp_report_passed(const struct OvfpReport *report);

// The process exit code the command-line runner would use for this report
// (0 pass, 1 verification failure, 2 config error); -1 on a null handle.
//
// # Safety
// `report` must be null or a live handle from [`ovfp_run_scenario`].
int ovfp_report_exit_code(const struct OvfpReport *report);

// The report serialized as schema-stable JSON.  Returns a heap string to
// release with [`ovfp_string_free`], or null on a null handle.
//
// # Safety
// `report` must be null or a live handle from [`ovfp_run_scenario`].
char *ovfp_report_json(const struct OvfpReport *report);

// The report rendered as human-readable text.  Returns a heap string to
// release with [`ovfp_string_free`], or null on a null handle.
//
// # Safety
// `report` must be null or a live handle from [`ovfp_run_scenario`].
char *ovfp_report_text(const struct OvfpReport *report);

// Release a report handle.  Null is a no-op; handles must not be used
// afterwards.
//
// # Safety
// `report` must be null or a live handle from [`ovfp_run_scenario`],
// released at most once.
void ovfp_report_free(struct OvfpReport *report);

// Release a string returned by this library.  Null is a no-op.
//
// # Safety
// `s` must be null or a string returned by this library, released at most
// once.
void ovfp_string_free(char *s);

// The library version as a static NUL-terminated string; do not free.
const char *ovfp_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* OVFP_H */
