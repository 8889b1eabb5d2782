#ifndef PILOTWAVE_H
#define PILOTWAVE_H

/* C interface to the pilot-wave scenario engine. The library evolves wave
 * functions on metric grids, guides deterministic trajectory ensembles,
 * builds latent-variable models for prescribed densities, and writes every
 * artifact plus a manifest under a caller-chosen output directory.
 *
 * Distinct requests may run on distinct threads; a single request must not
 * be shared. Strings returned without a matching _free point at static
 * storage and stay valid for the life of the process.
 */

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes; they double as the recommended process exit codes. */
typedef enum pw_status {
  PW_OK = 0,                  /* artifacts and manifest written */
  PW_CONFIG_ERROR = 1,        /* unknown scenario, key, or unusable value */
  PW_NUMERIC_ERROR = 2,       /* evolution or guidance tripped a numeric guard */
  PW_CERTIFICATION_ERROR = 3, /* ran to completion but failed its certificate */
  PW_USAGE_ERROR = 4          /* null handle or argument */
} pw_status;

const char* pw_version(void);
const char* pw_status_name(int status);

/* Message from the most recent failing call on the calling thread. */
const char* pw_last_error(void);

/* Scenario registry; names are static and the index order is stable. */
int pw_subcommand_count(void);
const char* pw_subcommand_name(int index);
int pw_is_subcommand(const char* name);

/* Complete default configuration for one scenario as INI text. Returns a
 * heap string (release with pw_text_free), NULL on an unknown name. */
char* pw_default_config_text(const char* subcommand);
void pw_text_free(char* text);

/* One scenario run: an opaque request accumulates settings, then runs.
 * An explicit seed overrides [run] seed; overrides use the form
 * "section.key=value" and apply on top of the config file. */
typedef struct pw_request pw_request;

pw_request* pw_request_new(const char* subcommand, const char* out_dir);
void pw_request_free(pw_request* req);

pw_status pw_request_set_config_file(pw_request* req, const char* path);
pw_status pw_request_set_seed(pw_request* req, uint64_t seed);
pw_status pw_request_set_threads(pw_request* req, int threads);
pw_status pw_request_set_verbose(pw_request* req, int verbose);
pw_status pw_request_add_override(pw_request* req, const char* assignment);

/* Receives every completed log line, without the trailing newline. */
typedef void (*pw_log_fn)(const char* line, void* user);
pw_status pw_request_set_logger(pw_request* req, pw_log_fn fn, void* user);

/* Runs the scenario and returns its status. The full log text stays
 * readable on the request until the next run or free. */
pw_status pw_request_run(pw_request* req);
const char* pw_request_log(const pw_request* req);

#ifdef __cplusplus
}
#endif

#endif /* PILOTWAVE_H */
