#ifndef FORCEINFER_H
#define FORCEINFER_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#if defined(FORCEINFER_BUILDING)
#define FI_API __declspec(dllexport)
#else
#define FI_API __declspec(dllimport)
#endif
#else
#define FI_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum fi_status {
  FI_OK = 0,
  FI_ERR_INVALID_ARGUMENT = 1, /* null pointer or out-of-range scalar */
  FI_ERR_PARSE = 2,            /* malformed or schema-violating input */
  FI_ERR_VALIDATION = 3,       /* well-formed input that breaks a domain rule */
  FI_ERR_IO = 4,               /* file could not be read or written */
  FI_ERR_USAGE = 5,            /* unknown suite or command option */
  FI_ERR_MISMATCH = 6,         /* oracle fixtures drifted or an identity failed */
  FI_ERR_INTERNAL = 7
} fi_status;

typedef struct fi_library fi_library;

/* Message of the last failure on the calling thread; never NULL. */
FI_API const char* fi_last_error(void);
FI_API const char* fi_status_name(fi_status status);
FI_API const char* fi_version(void);

/* Strings returned through char** out-parameters are owned by the caller. */
FI_API void fi_string_free(char* s);

FI_API fi_status fi_library_load_file(const char* path, fi_library** out);
FI_API fi_status fi_library_load_string(const char* json_text, fi_library** out);
FI_API void fi_library_free(fi_library* lib);
FI_API fi_status fi_library_counts(const fi_library* lib, size_t* type_count, size_t* model_count);
FI_API fi_status fi_library_subsumes(const fi_library* lib, const char* general, const char* specific, int* out);

typedef struct fi_infer_options {
  const char* config_path; /* required */
  int has_seed;
  uint64_t seed;
  int has_tau;
  double tau;
  const char* heuristic; /* NULL keeps the config value */
  const char* out_path;  /* NULL keeps the config value */
} fi_infer_options;

/* Runs the full pipeline. `report_out` may be NULL. */
FI_API fi_status fi_infer(const fi_infer_options* options, char** report_out);

/* Generates a scenario from ground truth and noise specs. The seed overrides
   the noise file's seed when has_seed is set. `out_path` and `scenario_out`
   may each be NULL. */
FI_API fi_status fi_simulate(const char* ground_truth_path, const char* noise_path, int has_seed, uint64_t seed,
                             const char* out_path, char** scenario_out);

/* Checks (or, with record != 0, regenerates) an oracle fixture suite.
   Returns FI_ERR_MISMATCH when any network drifts; `report_out` then lists
   the per-network differences. */
FI_API fi_status fi_oracle_run(const char* suite, const char* data_dir, int record, char** report_out);

/* (1 - k) / k for k in [0, 1]; +infinity at k = 0. */
FI_API fi_status fi_conflict_measure(double k, double* out);

#ifdef __cplusplus
}
#endif

#endif
