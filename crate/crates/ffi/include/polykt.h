#ifndef POLYKT_H
#define POLYKT_H

/* Generated by cbindgen; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every call.
 */
typedef enum PktStatus {
  PKT_STATUS_OK = 0,
  PKT_STATUS_NULL_POINTER = 1,
  PKT_STATUS_INVALID_ARGUMENT = 2,
  PKT_STATUS_DOMAIN = 3,
  PKT_STATUS_DIMENSION_MISMATCH = 4,
  PKT_STATUS_INFEASIBLE = 5,
  PKT_STATUS_ZERO_MEASURE = 6,
  PKT_STATUS_PARSE = 7,
  PKT_STATUS_NON_CONVERGENCE = 8,
  PKT_STATUS_MASS_COLLAPSE = 9,
  PKT_STATUS_ENUMERATION_GUARD = 10,
  PKT_STATUS_INVALID_SYMBOL = 11,
  PKT_STATUS_CODEC = 12,
  PKT_STATUS_IO = 13,
  PKT_STATUS_PANIC = 14,
} PktStatus;

/**
 * Opaque constraint set.
 */
typedef struct PktConstraints PktConstraints;

/**
 * Opaque sequential estimator.
 */
typedef struct PktEstimator PktEstimator;

/**
 * Numerical settings; obtain defaults from [`pkt_config_default`].
 */
typedef struct PktConfig {
  size_t quadrature_max_m;
  double quad_tol;
  size_t samples;
  uint64_t seed;
  double mass_floor;
  /**
   * Nonzero forces the Monte Carlo backend.
   */
  uint8_t force_monte_carlo;
} PktConfig;

/**
 * Byte buffer owned by the library.
 */
typedef struct PktBuffer {
  uint8_t *data;
  size_t len;
} PktBuffer;

/**
 * Symbol buffer owned by the library.
 */
typedef struct PktSymbols {
  uint32_t *data;
  size_t len;
} PktSymbols;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error message of this thread into `buf` (NUL-terminated,
 * truncated to `cap` bytes) and returns the full message length.
 */
size_t pkt_last_error_message(char *buf, size_t cap);

/**
 * Default numerical settings.
 */
struct PktConfig pkt_config_default(void);

/**
 * Whole simplex over `m` symbols.
 */
enum PktStatus pkt_constraints_full(size_t m, struct PktConstraints **out);

/**
 * Box `lower[i] <= θ_i <= upper[i]` on the first `len` coordinates
 * (alphabet size `len + 1`).
 */
enum PktStatus pkt_constraints_box(const double *lower,
                                   const double *upper,
                                   size_t len,
                                   struct PktConstraints **out);

/**
 * Parses a constraint configuration text (NUL-terminated UTF-8).
 */
enum PktStatus pkt_constraints_parse(const char *text, struct PktConstraints **out);

enum PktStatus pkt_constraints_alphabet_size(const struct PktConstraints *c, size_t *out);

void pkt_constraints_free(struct PktConstraints *c);

/**
 * `Dir(S; α)` with its standard error and natural logarithm.
 * `cfg` may be null for defaults; any out pointer may be null.
 */
enum PktStatus pkt_dirichlet_measure(const struct PktConstraints *c,
                                     const struct PktConfig *cfg,
                                     const double *alpha,
                                     size_t len,
                                     double *value,
                                     double *std_error,
                                     double *log_value);

/**
 * New estimator with no observations; `cfg` may be null.
 */
enum PktStatus pkt_estimator_new(const struct PktConstraints *c,
                                 const struct PktConfig *cfg,
                                 uint64_t seed,
                                 struct PktEstimator **out);

/**
 * Writes the next-symbol distribution into `probs[0..m]` and, when not
 * null, the standard errors into `std_errors[0..m]`.
 */
enum PktStatus pkt_estimator_predict(const struct PktEstimator *e,
                                     double *probs,
                                     double *std_errors,
                                     size_t m);

/**
 * Observes one symbol.
 */
enum PktStatus pkt_estimator_update(struct PktEstimator *e, uint32_t symbol);

/**
 * Natural log of the mixture probability of everything observed so far.
 */
enum PktStatus pkt_estimator_log_mixture(const struct PktEstimator *e, double *out);

void pkt_estimator_free(struct PktEstimator *e);

/**
 * Compresses `n` symbols; the result must be released with [`pkt_buffer_free`].
 */
enum PktStatus pkt_encode(const struct PktConstraints *c,
                          const struct PktConfig *cfg,
                          const uint32_t *symbols,
                          size_t n,
                          uint64_t seed,
                          struct PktBuffer *out);

/**
 * Decompresses a stream produced by [`pkt_encode`] with the same
 * constraints and settings; release the result with [`pkt_symbols_free`].
 */
enum PktStatus pkt_decode(const struct PktConstraints *c,
                          const struct PktConfig *cfg,
                          const uint8_t *bytes,
                          size_t len,
                          struct PktSymbols *out);

void pkt_buffer_free(struct PktBuffer buf);

void pkt_symbols_free(struct PktSymbols buf);

/**
 * Exact minimax (Shtarkov) redundancy in bits.
 */
enum PktStatus pkt_worst_case_exact(uint64_t n, const struct PktConstraints *c, double *out);

/**
 * Asymptotic worst-case redundancy in bits.
 */
enum PktStatus pkt_worst_case_asymptotic(uint64_t n,
                                         const struct PktConstraints *c,
                                         const struct PktConfig *cfg,
                                         double *out);

/**
 * Asymptotic average-case redundancy in bits.
 */
enum PktStatus pkt_average_asymptotic(uint64_t n,
                                      const struct PktConstraints *c,
                                      const struct PktConfig *cfg,
                                      double *out);

/**
 * Exact average-case redundancy in bits; `std_error` may be null.
 */
enum PktStatus pkt_average_exact(uint64_t n,
                                 const struct PktConstraints *c,
                                 const struct PktConfig *cfg,
                                 double *out,
                                 double *std_error);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* POLYKT_H */
