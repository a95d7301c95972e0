#ifndef RAGC_H
#define RAGC_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Dataset split selector for [`ragc_env_new_from_dataset`].
 */
typedef enum RagcSplit {
  RAGC_SPLIT_TRAIN_RL = 0,
  RAGC_SPLIT_TRAIN_DET = 1,
  RAGC_SPLIT_TEST = 2,
} RagcSplit;

/**
 * Result codes of every fallible call.
 */
typedef enum RagcStatus {
  RAGC_STATUS_OK = 0,
  RAGC_STATUS_NULL_POINTER = 1,
  RAGC_STATUS_CONFIG = 2,
  RAGC_STATUS_DATA = 3,
  RAGC_STATUS_RUNTIME = 4,
  RAGC_STATUS_DOMAIN = 5,
  RAGC_STATUS_SHAPE = 6,
  RAGC_STATUS_IO = 7,
  RAGC_STATUS_BUFFER_TOO_SMALL = 8,
  RAGC_STATUS_INVALID_UTF8 = 9,
  RAGC_STATUS_PANIC = 10,
} RagcStatus;

/**
 * Opaque DDPG agent.
 */
typedef struct RagcAgent RagcAgent;

/**
 * Opaque radar environment.
 */
typedef struct RagcEnv RagcEnv;

/**
 * Per-step outputs of [`ragc_env_step`].
 */
typedef struct RagcStepInfo {
  double reward;
  double f1;
  double action_norm;
  double power_db;
  uint32_t num_targets;
  uint32_t num_detections;
  bool done;
} RagcStepInfo;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the calling thread's last error message into `buf` as a
 * NUL-terminated string, truncating to `capacity - 1` bytes. Returns the
 * full message length in bytes, excluding the terminator.
 *
 * # Safety
 * `buf` must be null or valid for `capacity` bytes.
 */
size_t ragc_last_error_message(char *buf, size_t capacity);

/**
 * Library version as a static NUL-terminated string.
 */
const char *ragc_version(void);

/**
 * Creates an environment over `num_scenes` freshly generated scenes.
 * `config_toml` uses the experiment file format; an empty string selects
 * the defaults.
 *
 * # Safety
 * `config_toml` must be a valid C string and `out` a valid pointer.
 */
enum RagcStatus ragc_env_new_generated(const char *config_toml,
                                       uint32_t num_scenes,
                                       uint64_t seed,
                                       struct RagcEnv **out);

/**
 * Creates an environment over one split of a dataset written by
 * `ragc generate`. `out_dir` is the experiment output directory.
 *
 * # Safety
 * String arguments must be valid C strings and `out` a valid pointer.
 */
enum RagcStatus ragc_env_new_from_dataset(const char *config_toml,
                                          const char *out_dir,
                                          enum RagcSplit split,
                                          uint64_t seed,
                                          struct RagcEnv **out);

/**
 * Releases an environment. Null is ignored.
 *
 * # Safety
 * `env` must come from a `ragc_env_new_*` call and not be used afterwards.
 */
void ragc_env_free(struct RagcEnv *env);

/**
 * Number of floats in one state (`channels * height * width`).
 *
 * # Safety
 * `env` must be a live handle or null (returns 0).
 */
size_t ragc_env_state_len(const struct RagcEnv *env);

/**
 * Starts the next episode and writes its first state into `state`.
 *
 * # Safety
 * `env` must be a live handle and `state` valid for `capacity` floats.
 */
enum RagcStatus ragc_env_reset(struct RagcEnv *env, float *state, size_t capacity);

/**
 * Applies `action` in `[-1, 1]`, writes the next state and step results.
 *
 * # Safety
 * `env` must be a live handle, `state` valid for `capacity` floats and
 * `info` a valid pointer.
 */
enum RagcStatus ragc_env_step(struct RagcEnv *env,
                              double action,
                              float *state,
                              size_t capacity,
                              struct RagcStepInfo *info);

/**
 * Creates an agent with freshly initialised networks.
 *
 * # Safety
 * `config_toml` must be a valid C string and `out` a valid pointer.
 */
enum RagcStatus ragc_agent_new(const char *config_toml, uint64_t seed, struct RagcAgent **out);

/**
 * Releases an agent. Null is ignored.
 *
 * # Safety
 * `agent` must come from [`ragc_agent_new`] and not be used afterwards.
 */
void ragc_agent_free(struct RagcAgent *agent);

/**
 * Loads network weights written by `ragc train`.
 *
 * # Safety
 * `agent` must be a live handle and `path` a valid C string.
 */
enum RagcStatus ragc_agent_load(struct RagcAgent *agent, const char *path);

/**
 * Saves all networks of the agent.
 *
 * # Safety
 * `agent` must be a live handle and `path` a valid C string.
 */
enum RagcStatus ragc_agent_save(const struct RagcAgent *agent, const char *path);

/**
 * Greedy action in `[-1, 1]` for one state of `len` floats.
 *
 * # Safety
 * `agent` must be a live handle, `state` valid for `len` floats and
 * `action` a valid pointer.
 */
enum RagcStatus ragc_agent_act(const struct RagcAgent *agent,
                               const float *state,
                               size_t len,
                               double *action);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RAGC_H */
