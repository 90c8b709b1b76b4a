/* potl — page-optimization engine, C API.
 *
 * Opaque-handle, status-code surface over the C++ core. All out-strings
 * are heap-allocated; release them with potl_string_free. Handles are
 * not thread-safe for concurrent create/destroy; the operations on a
 * live engine are internally synchronized.
 */
#ifndef POTL_H
#define POTL_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef struct potl_engine potl_engine;

typedef enum potl_status {
  POTL_OK = 0,
  POTL_E_USAGE = 1,            /* bad arguments / malformed request shape */
  POTL_E_IO = 2,               /* file missing or unreadable */
  POTL_E_PARSE = 3,            /* malformed document or schema violation */
  POTL_E_VALIDATION = 4,       /* model failed validation */
  POTL_E_CONFIG = 5,           /* config file problems */
  POTL_E_UNKNOWN_HANDLER = 6,  /* unregistered fetcher */
  POTL_E_UNKNOWN_POLICY = 7,   /* unregistered policy */
  POTL_E_FETCH = 8,            /* fetcher failure */
  POTL_E_INFEASIBLE = 9,       /* no constraint-satisfying assignment */
  POTL_E_POOL_TOO_SMALL = 10,  /* fewer items than positions */
  POTL_E_SEARCH_SPACE = 11,    /* rejection budget and guard exhausted */
  POTL_E_DUPLICATE = 12,       /* instance id already recorded */
  POTL_E_STORAGE = 13,         /* persistence failure */
  POTL_E_DOMAIN = 14,          /* numeric domain error */
  POTL_E_INTERNAL = 15
} potl_status;

const char* potl_version(void);
const char* potl_status_name(int status);

/* Message for the most recent failure on this thread. */
const char* potl_last_error(void);

void potl_string_free(char* s);

/* Parses and validates a POTL document. On clean parse returns POTL_OK
 * and a report JSON {"ok": bool, "issues": [...]}; the model dump is
 * included under "model" when include_dump is nonzero. Parse failures
 * return POTL_E_PARSE / POTL_E_IO with no report. */
potl_status potl_validate_file(const char* model_path, int include_dump,
                               char** out_report_json);

potl_status potl_engine_create(const char* config_path, potl_engine** out);
void potl_engine_destroy(potl_engine* engine);

/* request_json: {"request_id": str, "user_id"?: str, "seed"?: uint,
 *                "extra"?: {str: str}}.
 * record != 0 indexes the serve for feedback (and journals it). */
potl_status potl_engine_instantiate(potl_engine* engine,
                                    const char* request_json, int record,
                                    char** out_instance_json);

/* Layout-bound HTML for an instance JSON produced by this engine. */
potl_status potl_engine_render_html(potl_engine* engine,
                                    const char* instance_json,
                                    char** out_html);

/* event_json: {"instance_id": str, "token"?: str,
 *              "type": "impression"|"click", "at": iso8601}.
 * Shape violations return POTL_E_USAGE; well-shaped events always
 * succeed and report {"updated": [...], "dead_lettered": bool}. */
potl_status potl_engine_ingest_event(potl_engine* engine,
                                     const char* event_json,
                                     char** out_result_json);

/* Arm table JSON; dof_id NULL means all DoFs. */
potl_status potl_engine_stats(potl_engine* engine, const char* dof_id,
                              char** out_json);

potl_status potl_engine_dead_letters(potl_engine* engine, char** out_json);

/* Closed-loop simulation against the configured user model. Either
 * out pointer may be NULL. policy may be NULL (per-DoF defaults). */
potl_status potl_engine_simulate(potl_engine* engine, uint64_t serves,
                                 const char* policy, int has_seed,
                                 uint64_t seed, char** out_report_json,
                                 char** out_series_csv);

/* Writes the stats snapshot if one is configured. */
potl_status potl_engine_flush(potl_engine* engine);

#ifdef __cplusplus
}
#endif

#endif /* POTL_H */
