#ifndef TRACELAB_H
#define TRACELAB_H

/* C interface to the tracelab library. All handles are opaque; every
   fallible call returns a tl_status and leaves a message retrievable
   with tl_last_error() on the calling thread. Strings returned through
   char** out-parameters are owned by the caller and freed with
   tl_string_free(). */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define TL_API __declspec(dllexport)
#else
#define TL_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum tl_status {
  TL_OK = 0,
  TL_INVALID_ARGUMENT = 1,
  TL_PRECONDITION_VIOLATION = 2,
  TL_UNSTABLE_RANK = 3,
  TL_NOT_SYMPLECTIC = 4,
  TL_ENERGY_DRIFT = 5,
  TL_STEP_SIZE_COLLAPSE = 6,
  TL_NOT_PERIODIC = 7,
  TL_DEPENDENT_GRADIENTS = 8,
  TL_DEGENERATE_DETERMINANT = 9,
  TL_INCOMPLETE_SPECTRUM = 10,
  TL_COUNT_CAP_EXCEEDED = 11,
  TL_UNRESOLVED_PHASE = 12,
  TL_CONFIG_ERROR = 13,
  TL_IO_ERROR = 14,
  TL_VARIANCE_BLOW_UP = 15,
  TL_CONVERGENCE_FAILURE = 16,
  TL_INTERNAL_ERROR = 99
} tl_status;

typedef struct tl_config tl_config;
typedef struct tl_report tl_report;

typedef struct tl_run_options {
  int threads;
  uint64_t seed;
  int timing;     /* fill wall_ms */
  int emit_plots; /* tl_report_write also writes plot.gnuplot */
} tl_run_options;

typedef struct tl_row {
  double h;
  double quantum_re, quantum_im;
  double semicl_re, semicl_im;
  double abs_err, rel_err;
  long n_eigenvalues;
  double wall_ms;
  int calibration; /* nonzero for the row used to fix phases */
} tl_row;

typedef struct tl_component {
  double t;
  int dim;
  double action;
  double d2_re, d2_im; /* density-family components only */
  double measure;
  int candidate_a, candidate_b;
  int has_phase, phase;
  int has_track_phase, track_phase;
  int is_torus;
  double curvature; /* tori only */
} tl_component;

TL_API const char* tl_version(void);
TL_API const char* tl_status_name(tl_status s);
TL_API const char* tl_last_error(void);
TL_API void tl_string_free(char* s);
TL_API tl_run_options tl_run_options_default(void);

TL_API tl_status tl_config_load(const char* path, tl_config** out);
TL_API tl_status tl_config_parse(const char* json_text, tl_config** out);
TL_API void tl_config_free(tl_config* cfg);
TL_API size_t tl_config_warning_count(const tl_config* cfg);
TL_API const char* tl_config_warning(const tl_config* cfg, size_t i);

/* sweep calibrates unresolved phases at the smallest h; compare uses
   branch-track phases and fails with TL_UNRESOLVED_PHASE if any remain. */
TL_API tl_status tl_sweep(const tl_config* cfg, const tl_run_options* opts, tl_report** out);
TL_API tl_status tl_compare(const tl_config* cfg, const tl_run_options* opts, tl_report** out);
TL_API void tl_report_free(tl_report* rep);

TL_API size_t tl_report_row_count(const tl_report* rep);
TL_API tl_status tl_report_row(const tl_report* rep, size_t i, tl_row* out);
TL_API size_t tl_report_component_count(const tl_report* rep);
TL_API tl_status tl_report_component(const tl_report* rep, size_t i, tl_component* out);
TL_API size_t tl_report_warning_count(const tl_report* rep);
TL_API const char* tl_report_warning(const tl_report* rep, size_t i);
TL_API tl_status tl_report_csv(const tl_report* rep, char** out);
TL_API tl_status tl_report_components_json(const tl_report* rep, char** out);
/* report.csv, components.json and, if requested, plot.gnuplot */
TL_API tl_status tl_report_write(const tl_report* rep, const char* dir);

TL_API tl_status tl_analyze_quadratic(const tl_config* cfg, const tl_run_options* opts, char** components_json);
TL_API tl_status tl_classify(const tl_config* cfg, char** classify_json);
TL_API tl_status tl_berry_tabor(const tl_config* cfg, const tl_run_options* opts, char** tori_json,
                                char** amplitudes_csv);

TL_API tl_status tl_write_text(const char* dir, const char* name, const char* content);

#ifdef __cplusplus
}
#endif

#endif
