#ifndef WEYLSCAN_H
#define WEYLSCAN_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum WsStatus {
  WS_STATUS_OK = 0,
  WS_STATUS_NULL_POINTER = 1,
  WS_STATUS_INVALID_ARGUMENT = 2,
  WS_STATUS_OUT_OF_RANGE = 3,
  WS_STATUS_NO_CONVERGENCE = 4,
  WS_STATUS_PRECONDITION = 5,
  WS_STATUS_PARSE = 6,
  WS_STATUS_IO = 7,
  WS_STATUS_PANIC = 8,
} WsStatus;

// An L-function: coefficients plus gamma data.
typedef struct WsLFunction WsLFunction;

// Output of one CLI-equivalent run.
typedef struct WsRun WsRun;

// The records of one exponent scan.
typedef struct WsScan WsScan;

typedef struct WsComplex {
  double re;
  double im;
  double abs_error;
} WsComplex;

typedef struct WsScanRecord {
  double t;
  double modulus;
  size_t afe_length;
  double consistency_gap;
  double convexity_ratio;
  double weyl_ratio;
  bool accepted;
} WsScanRecord;

typedef struct WsVerdictCounts {
  size_t pass;
  size_t fail;
  size_t inconclusive;
} WsVerdictCounts;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or NULL. The pointer is
// valid until the next failing call on the same thread.
const char *ws_last_error(void);

// Library version as a static string.
const char *ws_version(void);

// Kloosterman sum S(m, n; c).
//
// # Safety
// `out` must be valid for writes.
enum WsStatus ws_kloosterman(int64_t m, int64_t n, uint64_t c, struct WsComplex *out);

// Coefficients of Δ up to `n_max`.
//
// # Safety
// `out` must be valid for writes.
enum WsStatus ws_lfunction_delta(size_t n_max, struct WsLFunction **out);

// A Maass form read from a coefficient file.
//
// # Safety
// `path` must be a NUL-terminated string and `out` valid for writes.
enum WsStatus ws_lfunction_load_maass(const char *path, struct WsLFunction **out);

// # Safety
// `h` must come from a `ws_lfunction_*` constructor and not be used again.
void ws_lfunction_free(struct WsLFunction *h);

// L(1/2 + it) through the approximate functional equation with the given
// balance parameter.
//
// # Safety
// `h` must be a live handle and `out` valid for writes.
enum WsStatus ws_central_value(const struct WsLFunction *h,
                               double t,
                               double balance,
                               struct WsComplex *out);

// |L(1/2 + it)| on t_min, t_min + step, ..., t_max.
//
// # Safety
// `h` must be a live handle and `out` valid for writes.
enum WsStatus ws_scan_run(const struct WsLFunction *h,
                          double t_min,
                          double t_max,
                          double step,
                          struct WsScan **out);

// Number of records, or 0 for NULL.
//
// # Safety
// `s` must be NULL or a live handle.
size_t ws_scan_len(const struct WsScan *s);

// # Safety
// `s` must be a live handle and `out` valid for writes.
enum WsStatus ws_scan_record(const struct WsScan *s, size_t index, struct WsScanRecord *out);

// # Safety
// `s` must come from [`ws_scan_run`] and not be used again.
void ws_scan_free(struct WsScan *s);

// Run a command as the command-line tool would, with `config` holding
// `key = value` lines (may be NULL). The output is kept in the handle.
//
// # Safety
// `command` and a non-NULL `config` must be NUL-terminated strings and
// `out` valid for writes.
enum WsStatus ws_run(const char *command, const char *config, struct WsRun **out);

// Rendered output; valid while the handle lives.
//
// # Safety
// `r` must be NULL or a live handle.
const char *ws_run_output(const struct WsRun *r);

// # Safety
// `r` must be NULL or a live handle.
struct WsVerdictCounts ws_run_counts(const struct WsRun *r);

// # Safety
// `r` must come from [`ws_run`] and not be used again.
void ws_run_free(struct WsRun *r);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* WEYLSCAN_H */
