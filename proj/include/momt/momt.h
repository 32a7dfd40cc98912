/* C interface to the matrix- and vector-valued optimal mass transport solver. */
#ifndef MOMT_MOMT_H
#define MOMT_MOMT_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define MOMT_API __declspec(dllexport)
#else
#define MOMT_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum momt_status {
  MOMT_OK = 0,
  MOMT_INVALID_ARGUMENT = 1,
  MOMT_SHAPE_MISMATCH = 2,
  MOMT_NOT_POSITIVE_DEFINITE = 3,
  MOMT_NON_POSITIVE_DENSITY = 4,
  MOMT_KERNEL_ASSUMPTION = 5,
  MOMT_FACTORIZATION_FAILED = 6,
  MOMT_BREAKDOWN_DETECTED = 7,
  MOMT_LINE_SEARCH_FAILED = 8,
  MOMT_POSITIVITY_LOST = 9,
  MOMT_INVALID_CONTRAST = 10,
  MOMT_IO_ERROR = 11,
  MOMT_FORMAT_ERROR = 12,
  MOMT_NOT_CONVERGED = 13,
  MOMT_INTERNAL_ERROR = 14
} momt_status;

typedef enum momt_kind { MOMT_KIND_MATRIX = 0, MOMT_KIND_VECTOR = 1 } momt_kind;
typedef enum momt_export_format { MOMT_EXPORT_GLYPH_CSV = 0, MOMT_EXPORT_PPM = 1 } momt_export_format;

typedef struct momt_problem momt_problem;
typedef struct momt_solution momt_solution;
typedef struct momt_bench_report momt_bench_report;

/* Message for the most recent failure on the calling thread; empty if none. */
MOMT_API const char* momt_last_error(void);
MOMT_API const char* momt_status_name(momt_status status);
MOMT_API const char* momt_version(void);

typedef struct momt_generator_options {
  momt_kind kind;
  const char* generator; /* "disk-quarters", "static" or "random" */
  int dim;
  int extent[3];
  int nt;
  int n;
  double gamma;
  double contrast;
  uint64_t seed;
  double disk_radius;   /* centered disk or ball, unit-cube lengths */
  double corner_radius; /* corner quarter disks or octants */
  double sigma_cells;   /* Gaussian smoothing width in cells */
} momt_generator_options;

typedef struct momt_problem_info {
  momt_kind kind;
  int dim;
  int extent[3];
  int nt;
  int n;
  int basis_count; /* operator basis size or edge count */
  double gamma;
  double contrast;
  double contrast_rho0; /* measured */
  double contrast_rho1;
  uint64_t seed;
} momt_problem_info;

MOMT_API void momt_generator_options_default(momt_generator_options* options);
MOMT_API momt_status momt_problem_generate(const momt_generator_options* options, momt_problem** out);
MOMT_API momt_status momt_problem_load(const char* path, momt_problem** out);
MOMT_API momt_status momt_problem_save(const momt_problem* problem, const char* path);
MOMT_API momt_status momt_problem_set_gamma(momt_problem* problem, double gamma);
MOMT_API momt_status momt_problem_get_info(const momt_problem* problem, momt_problem_info* info);
MOMT_API void momt_problem_free(momt_problem* problem);

typedef struct momt_solver_config {
  double tol_outer;
  double tol_inner; /* <= 0 selects 1e-3 for matrix and 1e-2 for vector problems */
  int max_outer;
  int max_inner;
  int absolute_tol; /* nonzero: compare the absolute KKT residual with tol_outer */
} momt_solver_config;

typedef struct momt_solution_info {
  int converged;
  int iterations;
  double distance2;
  double residual;
  size_t warning_count;
  momt_status failure; /* MOMT_OK unless a hard error stopped the iteration */
} momt_solution_info;

typedef struct momt_trace_record {
  int iter;
  double merit;
  double cost;
  double alpha;
  int pcg_iters;
  double shift;
} momt_trace_record;

MOMT_API void momt_solver_config_default(momt_solver_config* config);

/* Runs the solver. On MOMT_OK, MOMT_NOT_CONVERGED and solver failures after
 * initialization, *out receives the last accepted iterate and must be freed. */
MOMT_API momt_status momt_solve(const momt_problem* problem, const momt_solver_config* config,
                                momt_solution** out);
MOMT_API momt_status momt_solution_get_info(const momt_solution* solution, momt_solution_info* info);
MOMT_API size_t momt_solution_trace_length(const momt_solution* solution);
MOMT_API momt_status momt_solution_trace_at(const momt_solution* solution, size_t index,
                                            momt_trace_record* record);
MOMT_API const char* momt_solution_warning(const momt_solution* solution, size_t index);
/* Total mass of every time slice t = j/nt, j = 0..nt; *count receives nt + 1. */
MOMT_API momt_status momt_solution_slice_masses(const momt_solution* solution, double* masses,
                                                size_t capacity, size_t* count);
MOMT_API momt_status momt_solution_save(const momt_solution* solution, const char* path);
MOMT_API momt_status momt_solution_load(const char* path, momt_solution** out);
MOMT_API momt_status momt_solution_write_trace(const momt_solution* solution, const char* path);
/* Glyph CSV writes one file at `target`; PPM writes `<target>_NNN.ppm` per frame.
 * `files` (optional) receives the number of files written. */
MOMT_API momt_status momt_solution_export(const momt_solution* solution, momt_export_format format,
                                          const char* target, size_t* files);
MOMT_API void momt_solution_free(momt_solution* solution);

typedef struct momt_bench_overrides {
  int extent[3]; /* all zero: suite default */
  int nt;        /* 0: suite default */
  double gamma;  /* <= 0: suite default */
  double tol_outer;
  double tol_inner;
  int max_outer;
  int absolute_tol;
} momt_bench_overrides;

typedef struct momt_bench_row {
  const char* label;
  int iterations;
  int reference_iterations;
  long pcg_total;
  double seconds;
  double distance2;
  int converged;
  const char* status;
} momt_bench_row;

MOMT_API momt_status momt_bench_create(const char* suite, const momt_bench_overrides* overrides,
                                       momt_bench_report** out);
MOMT_API size_t momt_bench_case_count(const momt_bench_report* report);
MOMT_API const char* momt_bench_case_label(const momt_bench_report* report, size_t index);
/* Runs case `index`; solver failures are recorded in the row, not returned. */
MOMT_API momt_status momt_bench_run_case(momt_bench_report* report, size_t index);
MOMT_API momt_status momt_bench_row_at(const momt_bench_report* report, size_t index, momt_bench_row* row);
MOMT_API momt_status momt_bench_write_csv(const momt_bench_report* report, const char* path);
/* Fixed-width text table of the rows run so far; valid until the next call on the report. */
MOMT_API const char* momt_bench_table(momt_bench_report* report);
MOMT_API void momt_bench_free(momt_bench_report* report);

#ifdef __cplusplus
}
#endif

#endif /* MOMT_MOMT_H */
