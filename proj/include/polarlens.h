/* polarlens C API: the polarization-inference pipeline behind a small
 * shared-library surface. Stages run from JSON configs; handles are opaque
 * and every call reports errors through status codes plus a per-session
 * message. Status codes match the CLI exit codes. */

#ifndef POLARLENS_H
#define POLARLENS_H

#ifdef __cplusplus
extern "C" {
#endif

typedef enum polarlens_status {
  POLARLENS_OK = 0,
  POLARLENS_ERR_RUNTIME = 1,   /* IO failures, internal errors */
  POLARLENS_ERR_VALIDATION = 2 /* bad config, malformed or missing inputs */
} polarlens_status;

/* Opaque session handle. Not thread-safe; use one session per thread. */
typedef struct polarlens_session polarlens_session;

polarlens_session* polarlens_session_new(void);
void polarlens_session_free(polarlens_session* session);

/* Runs one pipeline stage (see polarlens_stages()) with a JSON object config.
 * Returns POLARLENS_OK on success, otherwise a polarlens_status value with
 * details available from polarlens_last_error(). */
int polarlens_run_stage(polarlens_session* session, const char* stage,
                        const char* config_json);

/* Message of the last failed call on this session ("" if none). The pointer
 * stays valid until the next call on the same session. */
const char* polarlens_last_error(const polarlens_session* session);

/* Manifest JSON of the last successful stage on this session ("" if none). */
const char* polarlens_last_manifest(const polarlens_session* session);

/* JSON array of canonical stage names. Static storage, never freed. */
const char* polarlens_stages(void);

const char* polarlens_version(void);

#ifdef __cplusplus
}
#endif

#endif /* POLARLENS_H */
