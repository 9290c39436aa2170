#ifndef SAMU_H
#define SAMU_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes of every fallible call.
 */
typedef enum SamuStatus {
  SAMU_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  SAMU_STATUS_NULL = -1,
  /**
   * A string argument was not valid UTF-8.
   */
  SAMU_STATUS_UTF8 = -2,
  SAMU_STATUS_IO = -3,
  SAMU_STATUS_PARSE = -4,
  /**
   * Invalid configuration, triplet or argument value.
   */
  SAMU_STATUS_INVALID = -5,
  /**
   * A Rust panic was caught at the boundary.
   */
  SAMU_STATUS_PANIC = -99,
} SamuStatus;

/**
 * Opaque agent handle.
 */
typedef struct SamuAgent SamuAgent;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * The last error message on this thread, or null after a successful call.
 * The pointer stays valid until the next library call on this thread.
 */
const char *samu_last_error(void);

/**
 * Library version as a static string.
 */
const char *samu_version(void);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must be null or a pointer obtained from this library, not yet freed.
 */
void samu_string_free(char *s);

/**
 * Opens an agent named `name` keeping its soul and conversation logs in
 * `data_dir`. `soul_path` may be null for `<data_dir>/samu.soul.txt`. An
 * existing soul is loaded.
 *
 * # Safety
 * String arguments must be null or valid NUL-terminated strings; `out` must
 * be a valid pointer to writable storage.
 */
enum SamuStatus samu_agent_open(const char *name,
                                const char *data_dir,
                                const char *soul_path,
                                struct SamuAgent **out);

/**
 * Releases an agent without saving. Null is ignored.
 *
 * # Safety
 * `agent` must be null or a handle from [`samu_agent_open`], not yet freed.
 */
void samu_agent_free(struct SamuAgent *agent);

/**
 * Passes one caregiver line (sentence or `___` command) to the agent and
 * returns the response text in `*out`. Set `*quit` (when not null) to 1
 * after `___quit`, 0 otherwise.
 *
 * # Safety
 * `agent` must be a live handle, `line` a valid NUL-terminated string,
 * `out` writable and `quit` null or writable.
 */
enum SamuStatus samu_agent_handle_line(struct SamuAgent *agent,
                                       const char *line,
                                       char **out,
                                       int32_t *quit);

/**
 * The status prompt, e.g. `Samu@listen.7.50.0%`.
 *
 * # Safety
 * `agent` must be a live handle and `out` writable.
 */
enum SamuStatus samu_agent_prompt(const struct SamuAgent *agent, char **out);

/**
 * The current imagery as text, one line per row.
 *
 * # Safety
 * `agent` must be a live handle and `out` writable.
 */
enum SamuStatus samu_agent_imagery(const struct SamuAgent *agent, char **out);

/**
 * Number of distinct triplets (actions) the agent knows.
 *
 * # Safety
 * `agent` must be a live handle and `out` writable.
 */
enum SamuStatus samu_agent_known_actions(const struct SamuAgent *agent, size_t *out);

/**
 * Writes the soul file.
 *
 * # Safety
 * `agent` must be a live handle.
 */
enum SamuStatus samu_agent_save(struct SamuAgent *agent);

/**
 * Runs one experiment (a [`SamuExperiment`] code) and writes its learning curve CSV to `out_csv`.
 * `config_path` may be null for the defaults; `seed` overrides the
 * config's seed.
 *
 * # Safety
 * String arguments must be null (where allowed) or valid NUL-terminated
 * strings.
 */
enum SamuStatus samu_run_experiment(int32_t kind,
                                    const char *config_path,
                                    uint64_t seed,
                                    const char *out_csv);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SAMU_H */
