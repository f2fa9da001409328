#ifndef SEGADV_H
#define SEGADV_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SegadvStatus {
  SEGADV_STATUS_OK = 0,
  SEGADV_STATUS_NULL_POINTER = 1,
  SEGADV_STATUS_INVALID_ARGUMENT = 2,
  SEGADV_STATUS_ALIGNMENT = 3,
  SEGADV_STATUS_BOUND_VIOLATION = 4,
  SEGADV_STATUS_BUFFER_TOO_SMALL = 5,
  SEGADV_STATUS_INTERNAL = 6,
  SEGADV_STATUS_PANIC = 7,
} SegadvStatus;

/**
 * Junction environment: corridors of deterministic tokens separated by
 * `junctions` choice points with `choices` options each.
 */
typedef struct SegadvEnv SegadvEnv;

/**
 * Configured value-based estimator.
 */
typedef struct SegadvEstimator SegadvEstimator;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failure on this thread, or NULL if none.
 * The pointer stays valid until the next failing call on the same thread.
 */
const char *segadv_last_error_message(void);

/**
 * TD errors `out[t] = values[t+1] - values[t]` for `t < horizon`.
 *
 * `values` has `horizon + 1` entries and its last entry must equal `reward`.
 *
 * # Safety
 * `values` must hold `horizon + 1` readable doubles and `out` `horizon` writable doubles.
 */
enum SegadvStatus segadv_compute_deltas(const double *values,
                                        uintptr_t horizon,
                                        double reward,
                                        double *out);

/**
 * Generalized advantage estimation over `len` TD errors.
 *
 * # Safety
 * `deltas` and `out` must each hold `len` doubles.
 */
enum SegadvStatus segadv_gae(const double *deltas, uintptr_t len, double lambda, double *out);

/**
 * Segment-aware advantages for explicit boundaries.
 *
 * `boundaries` are strictly increasing positions in `1..=horizon` ending at `horizon`.
 *
 * # Safety
 * `values` must hold `horizon + 1` doubles, `boundaries` `n_boundaries`
 * entries and `out` `horizon` writable doubles.
 */
enum SegadvStatus segadv_sae(const double *values,
                             uintptr_t horizon,
                             double reward,
                             const uintptr_t *boundaries,
                             uintptr_t n_boundaries,
                             double lambda,
                             double *out);

/**
 * Probability-threshold segmentation.
 *
 * Writes boundary positions to `out` (capacity `len` always suffices) and
 * their number to `out_count`.
 *
 * # Safety
 * `gen_probs` must hold `len` doubles, `out` `capacity` writable entries.
 */
enum SegadvStatus segadv_segment_probability(const double *gen_probs,
                                             uintptr_t len,
                                             double p,
                                             uintptr_t *out,
                                             uintptr_t capacity,
                                             uintptr_t *out_count);

/**
 * Bias bound `α·exp(T/β)·[1 + (1-λ)/(exp(M/β) - λ)]`; `M` must divide `T`.
 *
 * # Safety
 * `out` must point to a writable double.
 */
enum SegadvStatus segadv_bias_bound(double alpha,
                                    double beta,
                                    uintptr_t horizon,
                                    uintptr_t segment_len,
                                    double lambda,
                                    double *out);

/**
 * Group-relative advantages `(r - mean) / (std + 1e-8)`.
 *
 * # Safety
 * `rewards` and `out` must each hold `n` doubles.
 */
enum SegadvStatus segadv_grpo(const double *rewards, uintptr_t n, double *out);

/**
 * GAE estimator; NULL (with an error message) if `lambda` is outside [0, 1].
 */
struct SegadvEstimator *segadv_estimator_new_gae(double lambda);

/**
 * Segment-aware estimator with probability-threshold segmentation.
 */
struct SegadvEstimator *segadv_estimator_new_sae(double lambda, double p);

/**
 * Monte Carlo estimator (GAE with λ = 1).
 */
struct SegadvEstimator *segadv_estimator_new_mc(void);

/**
 * Run the estimator on one trajectory.
 *
 * # Safety
 * `estimator` must come from a `segadv_estimator_new_*` function and not be
 * freed. `tokens`, `gen_probs` and `out` hold `len` elements; `values` holds
 * `len + 1` doubles with the last equal to `reward`.
 */
enum SegadvStatus segadv_estimator_estimate(const struct SegadvEstimator *estimator,
                                            const uint32_t *tokens,
                                            const double *gen_probs,
                                            uintptr_t len,
                                            double reward,
                                            const double *values,
                                            double *out);

/**
 * # Safety
 * `estimator` must be NULL or a live handle; it must not be used afterwards.
 */
void segadv_estimator_free(struct SegadvEstimator *estimator);

/**
 * NULL (with an error message) on invalid dimensions.
 */
struct SegadvEnv *segadv_env_new(uintptr_t junctions,
                                 uintptr_t corridor_len,
                                 uintptr_t choices,
                                 uint64_t seed);

/**
 * Trajectory length `T`, or 0 for a NULL handle.
 *
 * # Safety
 * `env` must be NULL or a live handle.
 */
uintptr_t segadv_env_horizon(const struct SegadvEnv *env);

/**
 * Sample one rollout under a policy that puts `correct_prob` on every correct choice.
 *
 * # Safety
 * `env` must be a live handle; `tokens` and `gen_probs` must hold
 * `segadv_env_horizon(env)` writable elements and `reward` one double.
 */
enum SegadvStatus segadv_env_rollout(const struct SegadvEnv *env,
                                     double correct_prob,
                                     uint64_t seed,
                                     uint32_t *tokens,
                                     double *gen_probs,
                                     double *reward);

/**
 * # Safety
 * `env` must be NULL or a live handle; it must not be used afterwards.
 */
void segadv_env_free(struct SegadvEnv *env);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SEGADV_H */
