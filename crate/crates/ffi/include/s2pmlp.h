#ifndef S2PMLP_H
#define S2PMLP_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum S2pStatus {
  S2P_STATUS_OK = 0,
  S2P_STATUS_NULL_POINTER = 1,
  S2P_STATUS_DIMENSION = 2,
  S2P_STATUS_NON_FINITE = 3,
  S2P_STATUS_UNSUPPORTED_DIMENSION = 4,
  S2P_STATUS_TAMPER_DETECTED = 5,
  S2P_STATUS_SINGULAR_INPUT = 6,
  S2P_STATUS_RANGE = 7,
  S2P_STATUS_USAGE = 8,
  S2P_STATUS_PROTOCOL_ABORT = 9,
  S2P_STATUS_IO = 10,
  S2P_STATUS_PANIC = 11,
} S2pStatus;

/**
 * Elementwise protocols taking an `rows x cols` input from each party.
 */
typedef enum S2pElementwise {
  /**
   * Shares of `A ⊙ B` for Alice's `A` and Bob's `B`.
   */
  S2P_ELEMENTWISE_HADAMARD = 0,
  /**
   * Shares of `1 / (A + B)`, entrywise.
   */
  S2P_ELEMENTWISE_RECIPROCAL = 1,
  /**
   * Shares of `max(A + B, 0)`.
   */
  S2P_ELEMENTWISE_RELU = 2,
  /**
   * The 0/1 pattern of `A + B > 0`, learned in full by both parties.
   */
  S2P_ELEMENTWISE_RELU_DERIVATIVE = 3,
  /**
   * Shares of the row softmax of `A + B`.
   */
  S2P_ELEMENTWISE_SOFTMAX = 4,
} S2pElementwise;

/**
 * Opaque two-party session. Not safe to use from two threads at once.
 */
typedef struct S2pSession S2pSession;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failing call on this thread, or null if none failed.
 * The pointer stays valid until the next failing call on the same thread.
 */
const char *s2p_last_error_message(void);

/**
 * Static, NUL-terminated name of a status code.
 */
const char *s2p_status_name(enum S2pStatus status);

/**
 * Creates a session. On success `*out` owns a handle for
 * [`s2p_session_free`]; on failure it is set to null.
 *
 * # Safety
 * `out` must be null or point to writable storage for one pointer.
 */
enum S2pStatus s2p_session_new(size_t rho,
                               size_t verify_rounds,
                               double mask_scale,
                               uint64_t seed,
                               struct S2pSession **out);

/**
 * Releases a session. Null is ignored.
 *
 * # Safety
 * `session` must be null or a handle from [`s2p_session_new`] not yet freed.
 */
void s2p_session_free(struct S2pSession *session);

/**
 * Bytes sent by all parties so far; 0 for a null handle.
 *
 * # Safety
 * `session` must be null or a live handle.
 */
uint64_t s2p_session_bytes_sent(const struct S2pSession *session);

/**
 * Messages sent by all parties so far; 0 for a null handle.
 *
 * # Safety
 * `session` must be null or a live handle.
 */
uint64_t s2p_session_rounds(const struct S2pSession *session);

/**
 * Shares of `A B` for Alice's `n x inner` matrix `A` and Bob's
 * `inner x m` matrix `B`. Each output buffer holds `n * m` doubles;
 * `out_alice + out_bob = A B`. `inner` must be at least 2.
 *
 * # Safety
 * `session` must be a live handle; `a`, `b` and both outputs must point to
 * buffers of the stated sizes.
 */
enum S2pStatus s2p_matmul(const struct S2pSession *session,
                          const double *a,
                          size_t n,
                          size_t inner,
                          const double *b,
                          size_t m,
                          double *out_alice,
                          double *out_bob);

/**
 * Shares of the row inner products of two `rows x cols` matrices. Each
 * output buffer holds `rows` doubles.
 *
 * # Safety
 * As for [`s2p_matmul`].
 */
enum S2pStatus s2p_row_dot(const struct S2pSession *session,
                           const double *a,
                           const double *b,
                           size_t rows,
                           size_t cols,
                           double *out_alice,
                           double *out_bob);

/**
 * Runs an elementwise protocol on Alice's `a` and Bob's `b`, both
 * `rows x cols`. Each output buffer holds `rows * cols` doubles.
 *
 * # Safety
 * As for [`s2p_matmul`].
 */
enum S2pStatus s2p_elementwise(const struct S2pSession *session,
                               enum S2pElementwise op,
                               const double *a,
                               const double *b,
                               size_t rows,
                               size_t cols,
                               double *out_alice,
                               double *out_bob);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* S2PMLP_H */
