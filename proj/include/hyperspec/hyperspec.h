/*
 * C interface to the hyperspec library. Every object is an opaque handle
 * released with its matching *_free function. Functions return hs_status; on
 * failure hs_last_error() describes the problem (per calling thread). Strings
 * returned through char** are owned by the caller and released with
 * hs_string_free.
 */
#ifndef HYPERSPEC_H
#define HYPERSPEC_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(HYPERSPEC_BUILDING)
#define HS_API __attribute__((visibility("default")))
#else
#define HS_API
#endif

typedef enum hs_status {
  HS_OK = 0,
  HS_ERR_DOMAIN = 1,
  HS_ERR_RESOURCE = 2,
  HS_ERR_CONVERGENCE = 3,
  HS_ERR_PARSE = 4,
  HS_ERR_IO = 5,
  HS_ERR_CONFIG = 6,
  HS_ERR_INTERNAL = 7,
  HS_ERR_NULL = 8
} hs_status;

typedef enum hs_matrix_kind {
  HS_MATRIX_GHAM = 0,
  HS_MATRIX_LAPLACIAN = 1,
  HS_MATRIX_LAPLACIAN_TILDE = 2,
  HS_MATRIX_ADJACENCY = 3
} hs_matrix_kind;

typedef struct hs_hypergraph hs_hypergraph;
typedef struct hs_matrix hs_matrix;
typedef struct hs_spectrum hs_spectrum;
typedef struct hs_law hs_law;

HS_API const char* hs_version(void);
HS_API const char* hs_last_error(void);
HS_API const char* hs_status_name(hs_status status);
HS_API void hs_string_free(char* s);

/* Hypergraphs */
HS_API hs_status hs_hypergraph_sample(int n, int r, double p, uint64_t seed, double edge_budget,
                                      hs_hypergraph** out);
HS_API hs_status hs_hypergraph_load(const char* path, hs_hypergraph** out);
HS_API hs_status hs_hypergraph_save(const hs_hypergraph* h, const char* path);
HS_API hs_status hs_hypergraph_edge_count(const hs_hypergraph* h, size_t* out);
/* Copies edge_count * r vertex labels (edges in lexicographic order). */
HS_API hs_status hs_hypergraph_edges(const hs_hypergraph* h, uint32_t* buffer, size_t length);
HS_API hs_status hs_hypergraph_to_json(const hs_hypergraph* h, char** out);
HS_API void hs_hypergraph_free(hs_hypergraph* h);

/* Matrices */
HS_API hs_status hs_matrix_from_hypergraph(const hs_hypergraph* h, hs_matrix_kind kind, hs_matrix** out);
/* Gaussian surrogate of the GHAM, optionally turned into a Laplacian. */
HS_API hs_status hs_matrix_surrogate(int n, int r, double p, uint64_t seed, hs_matrix_kind kind,
                                     hs_matrix** out);
HS_API hs_status hs_matrix_dim(const hs_matrix* m, size_t* out);
HS_API hs_status hs_matrix_get(const hs_matrix* m, size_t i, size_t j, double* out);
HS_API hs_status hs_matrix_write_csv(const hs_matrix* m, const char* path);
HS_API hs_status hs_matrix_write_binary(const hs_matrix* m, const char* path);
HS_API void hs_matrix_free(hs_matrix* m);

/* Spectra. scaling is one of "raw", "by_sqrt_n", "by_n", "by_sqrt_nr". */
HS_API hs_status hs_spectrum_compute(const hs_matrix* m, const char* scaling, hs_spectrum** out);
HS_API hs_status hs_spectrum_read_csv(const char* path, hs_spectrum** out);
HS_API hs_status hs_spectrum_write_csv(const hs_spectrum* s, const char* path);
HS_API hs_status hs_spectrum_size(const hs_spectrum* s, size_t* out);
/* Descending eigenvalues; length must be at least the spectrum size. */
HS_API hs_status hs_spectrum_values(const hs_spectrum* s, double* buffer, size_t length);
HS_API hs_status hs_spectrum_to_json(const hs_spectrum* s, char** out);
HS_API hs_status hs_spectrum_svg(const hs_spectrum* s, const hs_law* const* overlays, size_t overlay_count,
                                 int bins, const char* title, char** out);
HS_API void hs_spectrum_free(hs_spectrum* s);

/* Laws, described by JSON such as {"kind":"semicircle","sigma2":1} or
 * {"kind":"free_convolution","operands":[...,...]}. */
HS_API hs_status hs_law_from_json(const char* descriptor, hs_law** out);
HS_API hs_status hs_law_from_spectrum(const hs_spectrum* s, hs_law** out);
HS_API hs_status hs_law_cdf(const hs_law* law, double x, double* out);
HS_API hs_status hs_law_density(const hs_law* law, double x, double* out);
HS_API hs_status hs_law_stieltjes(const hs_law* law, double re, double im, double* out_re, double* out_im);
HS_API hs_status hs_law_moments(const hs_law* law, double* mean, double* variance);
HS_API hs_status hs_law_label(const hs_law* law, char** out);
HS_API hs_status hs_law_descriptor(const hs_law* law, char** out);
/* Density on `points` equally spaced abscissae covering the law's support
 * (or [lo, hi] when lo < hi), as CSV text with header "x,density,cdf". */
HS_API hs_status hs_law_tabulate(const hs_law* law, double lo, double hi, int points, char** out_csv);
HS_API void hs_law_free(hs_law* law);

/* Metrics: JSON object with ks, w1, bl_upper and labels. */
HS_API hs_status hs_metrics_compare(const hs_law* a, const hs_law* b, char** out_json);

/* Experiments. config_json must carry schema_version. When out_dir is not
 * NULL the record is written below it; timestamp may be NULL for the current
 * time. The returned JSON is the record plus "record_dir" when persisted. */
HS_API hs_status hs_experiment_default_config(char** out_json);
HS_API hs_status hs_experiment_run(const char* config_json, const char* out_dir, const char* timestamp,
                                   char** out_record_json);
HS_API hs_status hs_diagnostics(int n, int r, double p, char** out_json);

#ifdef __cplusplus
}
#endif

#endif
