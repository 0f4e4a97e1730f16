#ifndef HYPERELL_H
#define HYPERELL_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum HyperellStatus {
  HYPERELL_STATUS_OK = 0,
  HYPERELL_STATUS_NULL_POINTER = 1,
  HYPERELL_STATUS_INVALID_ARGUMENT = 2,
  HYPERELL_STATUS_BUDGET_EXCEEDED = 3,
  HYPERELL_STATUS_NO_CONVERGENCE = 4,
  HYPERELL_STATUS_OVERFLOW = 5,
  HYPERELL_STATUS_BUFFER_TOO_SMALL = 6,
  HYPERELL_STATUS_INTERNAL = 7,
  HYPERELL_STATUS_PANIC = 8,
} HyperellStatus;

// Zeros of the model `F_K` on the circle.
typedef struct HyperellFkZeros HyperellFkZeros;

// L-polynomial of one quadratic character with its zeros.
typedef struct HyperellLData HyperellLData;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Builds L-data for `D` given by `len` coefficients, constant term first.
//
// # Safety
// `coeffs` must point to `len` readable values and `out` must be writable.
enum HyperellStatus hyperell_ldata_new(uint64_t q,
                                       const uint64_t *coeffs,
                                       size_t len,
                                       struct HyperellLData **out);

// Builds L-data for `D` written as text, e.g. `"x^3+2*x+1"`.
//
// # Safety
// `text` must be a NUL-terminated string and `out` must be writable.
enum HyperellStatus hyperell_ldata_parse(uint64_t q, const char *text, struct HyperellLData **out);

// # Safety
// `ld` must come from `hyperell_ldata_new` or be null.
void hyperell_ldata_free(struct HyperellLData *ld);

// # Safety
// `ld` must be a live handle.
enum HyperellStatus hyperell_ldata_genus(const struct HyperellLData *ld, size_t *out);

// Coefficients `c_0..c_2g`. Fails with `Overflow` if one does not fit in
// 64 bits and with `BufferTooSmall` if `len < 2g + 1`; `written` always
// receives `2g + 1`.
//
// # Safety
// `buf` must have room for `len` values.
enum HyperellStatus hyperell_ldata_coeffs(const struct HyperellLData *ld,
                                          int64_t *buf,
                                          size_t len,
                                          size_t *written);

// Zero angles `theta_j` in `[0, 1)`, sorted; `2g` values.
//
// # Safety
// `buf` must have room for `len` values.
enum HyperellStatus hyperell_ldata_thetas(const struct HyperellLData *ld,
                                          double *buf,
                                          size_t len,
                                          size_t *written);

// `L(u)` at `u = re + i im`.
//
// # Safety
// Pointers must be valid.
enum HyperellStatus hyperell_ldata_value(const struct HyperellLData *ld,
                                         double re,
                                         double im,
                                         double *out_re,
                                         double *out_im);

// `S(theta)`.
//
// # Safety
// Pointers must be valid.
enum HyperellStatus hyperell_s_theta(const struct HyperellLData *ld, double theta, double *out);

// `N(theta)`, the number of zero angles at most `theta`.
//
// # Safety
// Pointers must be valid.
enum HyperellStatus hyperell_n_theta(const struct HyperellLData *ld, double theta, size_t *out);

// Relative defect `|L - P_K Z_K| / |L|` at `u = re + i im`.
//
// # Safety
// Pointers must be valid.
enum HyperellStatus hyperell_hybrid_defect(const struct HyperellLData *ld,
                                           double re,
                                           double im,
                                           size_t k,
                                           double *out);

// Zeros of `F_K` for truncation `k >= 1`.
//
// # Safety
// `ld` must be a live handle and `out` writable.
enum HyperellStatus hyperell_fk_zeros_new(const struct HyperellLData *ld,
                                          size_t k,
                                          struct HyperellFkZeros **out);

// # Safety
// `z` must come from `hyperell_fk_zeros_new` or be null.
void hyperell_fk_zeros_free(struct HyperellFkZeros *z);

// Number of zeros, each tangential zero counted once.
//
// # Safety
// Pointers must be valid.
enum HyperellStatus hyperell_fk_zeros_count(const struct HyperellFkZeros *z, size_t *out);

// Zero angles `phi_j`, sorted.
//
// # Safety
// `buf` must have room for `len` values.
enum HyperellStatus hyperell_fk_zeros_phis(const struct HyperellFkZeros *z,
                                           double *buf,
                                           size_t len,
                                           size_t *written);

// Jacobi symbol `(a / b)` for polynomials over F_q, `b` monic.
//
// # Safety
// Coefficient pointers must cover their lengths; `out` must be writable.
enum HyperellStatus hyperell_jacobi(uint64_t q,
                                    const uint64_t *a,
                                    size_t a_len,
                                    const uint64_t *b,
                                    size_t b_len,
                                    int8_t *out);

// Copies the last error message on this thread into `buf` as a
// NUL-terminated string, truncating if needed. Returns the full message
// length without the terminator.
//
// # Safety
// `buf` must have room for `len` bytes, or be null with `len == 0`.
size_t hyperell_last_error(char *buf, size_t len);

// Library version as a static NUL-terminated string.
const char *hyperell_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HYPERELL_H */
