#ifndef PT_HYBRID_H
#define PT_HYBRID_H

/* Generated by cbindgen from src/lib.rs; edits are overwritten. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define PT_OK 0

#define PT_ERR_NULL 1

#define PT_ERR_INVALID 2

#define PT_ERR_DOMAIN 3

#define PT_ERR_IO 4

#define PT_ERR_PARSE 5

#define PT_ERR_PANIC 6

#define PT_ERR_OTHER 7

// Blow-up gain parameters `(T, k, μ0)`.
typedef struct PtBlowUp PtBlowUp;

// A piecewise-constant switching signal with its mode partition.
typedef struct PtSignal PtSignal;

// Outcome of a signal-class check. Witness times are NaN when absent.
typedef struct {
  bool pass;
  double min_slack;
  double witness_t1;
  double witness_t2;
} PtValidation;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static nul-terminated string.
const char *pt_version(void);

// Copies the calling thread's last error message into `buf`.
//
// Returns the message length in bytes without the terminator, or 0 when
// there is none. At most `len − 1` bytes are copied and the result is always
// nul-terminated when `len > 0`.
//
// # Safety
// `buf` must be null or point to `len` writable bytes.
size_t pt_last_error_message(char *buf, size_t len);

// Clears the calling thread's last error.
void pt_clear_error(void);

// Creates gain parameters; `T > 0`, `k ≥ 1`, `μ0 ≥ 1`.
//
// # Safety
// `out` must be a valid pointer to write a handle into.
int32_t pt_blowup_new(double t_scale, double k, double mu0, PtBlowUp **out);

// # Safety
// `h` must be null or a handle from [`pt_blowup_new`] not yet freed.
void pt_blowup_free(PtBlowUp *h);

// Terminal time `Υ = T·μ0^(−1/k)`.
//
// # Safety
// `h` must be a live handle and `out` writable.
int32_t pt_blowup_terminal_time(const PtBlowUp *h, double *out);

// Gain `μ(t)` for `0 ≤ t < Υ`.
//
// # Safety
// `h` must be a live handle and `out` writable.
int32_t pt_blowup_gain(const PtBlowUp *h, double t, double *out);

// Dilated time `s(t)`.
//
// # Safety
// `h` must be a live handle and `out` writable.
int32_t pt_blowup_dilate(const PtBlowUp *h, double t, double *out);

// Original time `t(s)`, the inverse of [`pt_blowup_dilate`].
//
// # Safety
// `h` must be a live handle and `out` writable.
int32_t pt_blowup_contract(const PtBlowUp *h, double s, double *out);

// Switch budget `ω_k(μ(t2), μ(t1))/τ_d + N0` on the window `(t1, t2]`.
//
// # Safety
// `h` must be a live handle and `out` writable.
int32_t pt_bu_adt_bound(const PtBlowUp *h,
                        double tau_d,
                        double n0,
                        double t1,
                        double t2,
                        double *out);

// Builds a signal from `len` pieces: piece `i` starts at `starts[i]` in mode
// `modes[i]`. The first start must be 0 and starts must increase.
//
// # Safety
// `starts` and `modes` must hold `len` elements; `stable` and `unstable`
// must hold `n_stable` and `n_unstable` elements (either may be null when
// its count is 0); `out` must be writable.
int32_t pt_signal_new(const double *starts,
                      const size_t *mode_ids,
                      size_t len,
                      double end_time,
                      const size_t *stable,
                      size_t n_stable,
                      const size_t *unstable,
                      size_t n_unstable,
                      PtSignal **out);

// Loads a signal CSV and its JSON sidecar.
//
// # Safety
// `path` must be a nul-terminated UTF-8 string and `out` writable.
int32_t pt_signal_load(const char *path, PtSignal **out);

// # Safety
// `h` must be null or a handle from this library not yet freed.
void pt_signal_free(PtSignal *h);

// Number of switches.
//
// # Safety
// `h` must be a live handle and `out` writable.
int32_t pt_signal_switch_count(const PtSignal *h, size_t *out);

// Checks the signal against the blow-up dwell-time class.
//
// # Safety
// `gain` and `signal` must be live handles and `out` writable.
int32_t pt_validate_bu_adt(const PtBlowUp *gain,
                           const PtSignal *signal,
                           double tau_d,
                           double n0,
                           PtValidation *out);

// Checks the unstable-mode activation budget.
//
// # Safety
// `gain` and `signal` must be live handles and `out` writable.
int32_t pt_validate_bu_aat(const PtBlowUp *gain,
                           const PtSignal *signal,
                           double tau_a,
                           double t0,
                           PtValidation *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PT_HYBRID_H */
