#ifndef ROUGHLOOP_H
#define ROUGHLOOP_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum RlStatus {
  RL_STATUS_OK = 0,
  RL_STATUS_NULL_POINTER = 1,
  RL_STATUS_INVALID_PARAMS = 2,
  RL_STATUS_SHAPE = 3,
  RL_STATUS_CUT_LOCUS = 4,
  RL_STATUS_CONFIG = 5,
  RL_STATUS_UNKNOWN_EXPERIMENT = 6,
  RL_STATUS_UTF8 = 7,
  RL_STATUS_INTERNAL = 99,
} RlStatus;

/**
 * Opaque validated experiment configuration.
 */
typedef struct RlConfig RlConfig;

/**
 * Opaque sampled path.
 */
typedef struct RlPath RlPath;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. Valid until the
 * next failing call on the same thread.
 */
const char *rl_last_error(void);

/**
 * Brownian path of dimension `dim` on 2^level cells from (seed, stream).
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum RlStatus rl_path_brownian(size_t dim,
                               uint32_t level,
                               uint64_t seed,
                               uint64_t stream,
                               struct RlPath **out);

/**
 * Path from `len` = dim·(2^level + 1) grid values, point-major.
 *
 * # Safety
 * `values` must point to `len` readable doubles and `out` to writable storage.
 */
enum RlStatus rl_path_from_values(size_t dim,
                                  uint32_t level,
                                  const double *values,
                                  size_t len,
                                  struct RlPath **out);

/**
 * Releases a path; NULL is ignored.
 *
 * # Safety
 * `p` must come from this library and not be used afterwards.
 */
void rl_path_free(struct RlPath *p);

/**
 * Number of stored doubles, dim·(2^level + 1); 0 for NULL.
 *
 * # Safety
 * `p` must be NULL or a live handle.
 */
size_t rl_path_len(const struct RlPath *p);

/**
 * Copies the grid values into `buf`, which must hold `rl_path_len` doubles.
 *
 * # Safety
 * `p` must be a live handle and `buf` writable for `cap` doubles.
 */
enum RlStatus rl_path_values(const struct RlPath *p, double *buf, size_t cap);

/**
 * ‖x‖_{m,θ} of a path (all components jointly).
 *
 * # Safety
 * `p` must be a live handle and `out` writable.
 */
enum RlStatus rl_besov_norm(const struct RlPath *p, uint32_t m, double theta, double *out);

/**
 * Largest grid defect of the integration-by-parts identity of the lift.
 *
 * # Safety
 * `p` must be a live handle and `out` writable.
 */
enum RlStatus rl_lift_ibp_defect(const struct RlPath *p, double *out);

/**
 * d(X(1,e,w), e) for the flow driven by a 3-dimensional path on SO(3).
 *
 * # Safety
 * `p` must be a live handle and `out` writable.
 */
enum RlStatus rl_so3_endpoint_distance(const struct RlPath *p, double *out);

/**
 * Parses and validates config text (key = value lines with [besov] and
 * [params] sections).
 *
 * # Safety
 * `text` must be a NUL-terminated string and `out` writable.
 */
enum RlStatus rl_config_parse(const char *text, struct RlConfig **out);

/**
 * Releases a config; NULL is ignored.
 *
 * # Safety
 * `c` must come from this library and not be used afterwards.
 */
void rl_config_free(struct RlConfig *c);

/**
 * Runs the experiment and returns its CSV document in `*out`, to be released
 * with `rl_string_free`. `*all_pass` is set to 1 when every check passed.
 *
 * # Safety
 * `c` must be a live handle; `out` and `all_pass` writable.
 */
enum RlStatus rl_run_csv(const struct RlConfig *c,
                         size_t workers,
                         bool zero_time,
                         char **out,
                         int32_t *all_pass);

/**
 * Releases a string returned by this library; NULL is ignored.
 *
 * # Safety
 * `s` must come from this library and not be used afterwards.
 */
void rl_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ROUGHLOOP_H */
