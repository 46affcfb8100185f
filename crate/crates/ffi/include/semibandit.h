#ifndef SEMIBANDIT_H
#define SEMIBANDIT_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Result code of every call.
 */
typedef enum SbStatus {
  SB_STATUS_OK = 0,
  SB_STATUS_INVALID_ARGUMENT = 1,
  SB_STATUS_NUMERIC_DOMAIN = 2,
  SB_STATUS_CONFIG = 3,
  SB_STATUS_IO = 4,
  SB_STATUS_INTERNAL = 5,
  SB_STATUS_NULL_POINTER = 6,
  SB_STATUS_PANIC = 7,
} SbStatus;

/*
 Context layout codes accepted by [`sb_env_new`] and [`sb_run_episode`].
 */
typedef enum SbContextMode {
  SB_CONTEXT_MODE_BLOCK = 0,
  SB_CONTEXT_MODE_SPHERE = 1,
} SbContextMode;

/*
 A simulated environment and the round it last produced.
 */
typedef struct SbEnvironment SbEnvironment;

/*
 A bandit policy with its own random generator.
 */
typedef struct SbPolicy SbPolicy;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message of the last failed call on this thread, or null. The pointer is
 valid until the next failing call on the same thread.
 */
const char *sb_last_error_message(void);

/*
 Creates a GBOSE policy. `gamma_multiplier` scales the theoretical filter width.

 # Safety
 `out` must be a valid pointer to writable storage for a handle.
 */
enum SbStatus sb_policy_new_gbose(size_t horizon,
                                  double delta,
                                  double gamma_multiplier,
                                  uint64_t seed,
                                  struct SbPolicy **out);

/*
 Creates a linear Thompson-sampling policy.

 # Safety
 `out` must be a valid pointer to writable storage for a handle.
 */
enum SbStatus sb_policy_new_lints(double scale, double ridge, uint64_t seed, struct SbPolicy **out);

/*
 Creates a semiparametric Thompson-sampling policy.

 # Safety
 `out` must be a valid pointer to writable storage for a handle.
 */
enum SbStatus sb_policy_new_semits(double scale,
                                   double ridge,
                                   size_t mc_samples,
                                   uint64_t seed,
                                   struct SbPolicy **out);

/*
 Creates an action-centered Thompson-sampling policy with play
 probabilities clipped to `[p_min, p_max]`.

 # Safety
 `out` must be a valid pointer to writable storage for a handle.
 */
enum SbStatus sb_policy_new_acts(double scale,
                                 double ridge,
                                 double p_min,
                                 double p_max,
                                 uint64_t seed,
                                 struct SbPolicy **out);

/*
 Clears learned state for a new episode in dimension `dim`.

 # Safety
 `policy` must be a live handle.
 */
enum SbStatus sb_policy_reset(struct SbPolicy *policy, size_t dim, size_t horizon);

/*
 Picks an arm for one round. `contexts` holds `n_arms * dim` values, arm by
 arm. Writes the 1-based arm to `out_arm`; when `out_distribution` is not
 null it receives the `n_arms` play probabilities.

 # Safety
 `policy` must be a live handle; buffers must hold the stated lengths.
 */
enum SbStatus sb_policy_choose(struct SbPolicy *policy,
                               size_t t,
                               size_t n_arms,
                               size_t dim,
                               const double *contexts,
                               size_t *out_arm,
                               double *out_distribution);

/*
 Feeds back the reward of the most recent [`sb_policy_choose`].

 # Safety
 `policy` must be a live handle.
 */
enum SbStatus sb_policy_update(struct SbPolicy *policy, double reward);

/*
 Copies the current coefficient estimate into `out` (length `len >= dim`).

 # Safety
 `policy` must be a live handle and `out` must hold `len` values.
 */
enum SbStatus sb_policy_mu_hat(const struct SbPolicy *policy, double *out, size_t len);

/*
 Releases a policy handle. Null is ignored.

 # Safety
 `policy` must be null or a handle not yet freed.
 */
void sb_policy_free(struct SbPolicy *policy);

/*
 Creates an environment. `setting` is "I", "II", "III" or a registered tag.

 # Safety
 `setting` must be a NUL-terminated string and `out` writable.
 */
enum SbStatus sb_env_new(size_t n_arms,
                         size_t dim,
                         const char *setting,
                         uint32_t mode,
                         double noise_variance,
                         uint64_t seed,
                         struct SbEnvironment **out);

/*
 Advances to the next round and writes its `n_arms * dim` context values
 to `out` and the round number to `out_t`.

 # Safety
 `env` must be a live handle; `out` must hold `len` values.
 */
enum SbStatus sb_env_next_contexts(struct SbEnvironment *env,
                                   double *out,
                                   size_t len,
                                   size_t *out_t);

/*
 Plays 1-based `arm` in the current round and writes the observed reward.

 # Safety
 `env` must be a live handle and `out_reward` writable.
 */
enum SbStatus sb_env_reward(struct SbEnvironment *env, size_t arm, double *out_reward);

/*
 Cumulative regret so far.

 # Safety
 `env` must be a live handle and `out` writable.
 */
enum SbStatus sb_env_cumulative_regret(const struct SbEnvironment *env, double *out);

/*
 Releases an environment handle. Null is ignored.

 # Safety
 `env` must be null or a handle not yet freed.
 */
void sb_env_free(struct SbEnvironment *env);

/*
 Runs a full episode of `policy` (reset first) and writes the cumulative
 regret after each of the `horizon` steps to `out_curve`.

 # Safety
 `policy` must be a live handle, `setting` NUL-terminated and `out_curve`
 must hold `len >= horizon` values.
 */
enum SbStatus sb_run_episode(struct SbPolicy *policy,
                             size_t n_arms,
                             size_t dim,
                             const char *setting,
                             uint32_t mode,
                             double noise_variance,
                             size_t horizon,
                             uint64_t seed,
                             double *out_curve,
                             size_t len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SEMIBANDIT_H */
