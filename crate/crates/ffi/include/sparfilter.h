#ifndef SPARFILTER_H
#define SPARFILTER_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SfCostForm {
  SF_COST_FORM_POWER = 0,
  SF_COST_FORM_WEIGHT_RATIO = 1,
} SfCostForm;

typedef enum SfMatrixWhich {
  SF_MATRIX_WHICH_SAMPLE = 0,
  SF_MATRIX_WHICH_MAXIMAL = 1,
  SF_MATRIX_WHICH_TUNED = 2,
} SfMatrixWhich;

typedef enum SfMetric {
  SF_METRIC_MINKOWSKI = 0,
  SF_METRIC_L_INFINITY = 1,
} SfMetric;

typedef enum SfScale {
  SF_SCALE_CORRELATION = 0,
  SF_SCALE_COVARIANCE = 1,
} SfScale;

typedef enum SfStatus {
  SF_STATUS_OK = 0,
  SF_STATUS_NULL_POINTER = 1,
  SF_STATUS_INVALID_ARGUMENT = 2,
  SF_STATUS_INVALID_DATA = 3,
  SF_STATUS_NUMERICAL = 4,
  SF_STATUS_IO = 5,
  SF_STATUS_BUFFER_TOO_SMALL = 6,
  SF_STATUS_PANIC = 7,
} SfStatus;

typedef enum SfTarget {
  SF_TARGET_LEDOIT_WOLF = 0,
  SF_TARGET_NERCOME = 1,
} SfTarget;

// Observation matrix, `n` rows by `p` columns.
typedef struct SfData SfData;

// Output of [`sf_filter_run`].
typedef struct SfFilterResult SfFilterResult;

typedef struct SfFilterConfig {
  enum SfScale scale;
  enum SfMetric metric;
  // Minkowski exponent, >= 1. Ignored for `LInfinity`.
  double kappa;
  // 1-based inclusive eigenvalue band; `band_low == 0` means the full spectrum.
  size_t band_low;
  size_t band_high;
  // Non-zero: use the eigenvalues above the Marchenko-Pastur edge.
  int32_t mp_band;
  enum SfCostForm cost_form;
  double theta1;
  double theta2;
  // Scale for `WeightRatio`.
  double cost_scale;
  enum SfTarget target;
  size_t nercome_splits;
  double nercome_fraction;
  uint64_t seed;
} SfFilterConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the most recent failure on this thread, or null. The pointer
// stays valid until the next failing call on the same thread.
const char *sf_last_error(void);

// Library version as a static NUL-terminated string.
const char *sf_version(void);

// Defaults: correlation scale, Ledoit-Wolf target, Euclidean distance over
// the full spectrum, no cost.
struct SfFilterConfig sf_filter_config_default(void);

// Copies `n * p` row-major values into a new data handle.
//
// # Safety
// `values` must point to `n * p` readable doubles and `out` to writable storage.
enum SfStatus sf_data_from_buffer(const double *values, size_t n, size_t p, struct SfData **out);

// Reads a labelled CSV. With `log_returns != 0` the columns are treated as
// prices and converted to log returns.
//
// # Safety
// `path` must be a NUL-terminated string and `out` writable.
enum SfStatus sf_data_from_csv(const char *path, int32_t log_returns_flag, struct SfData **out);

// Number of rows, or 0 for a null handle.
//
// # Safety
// `data` must be null or a live handle.
size_t sf_data_n(const struct SfData *data);

// Number of columns, or 0 for a null handle.
//
// # Safety
// `data` must be null or a live handle.
size_t sf_data_p(const struct SfData *data);

// # Safety
// `data` must be null or a handle not yet freed.
void sf_data_free(struct SfData *data);

// Runs the filter. A null `config` uses [`sf_filter_config_default`].
//
// # Safety
// `data` must be a live handle, `config` null or readable, `out` writable.
enum SfStatus sf_filter_run(const struct SfData *data,
                            const struct SfFilterConfig *config,
                            struct SfFilterResult **out);

// Maximal-filter threshold; NaN for a null handle.
//
// # Safety
// `result` must be null or a live handle.
double sf_result_eta_star(const struct SfFilterResult *result);

// Tuned-filter threshold; NaN for a null handle.
//
// # Safety
// `result` must be null or a live handle.
double sf_result_eta_tilde(const struct SfFilterResult *result);

// Edges deleted by the maximal filter.
//
// # Safety
// `result` must be null or a live handle.
size_t sf_result_y_star(const struct SfFilterResult *result);

// Edges deleted by the tuned filter.
//
// # Safety
// `result` must be null or a live handle.
size_t sf_result_y_tilde(const struct SfFilterResult *result);

// Spectral distance at the maximal threshold.
//
// # Safety
// `result` must be null or a live handle.
double sf_result_distance_star(const struct SfFilterResult *result);

// Spectral distance at the tuned threshold.
//
// # Safety
// `result` must be null or a live handle.
double sf_result_distance_tilde(const struct SfFilterResult *result);

// Matrix dimension.
//
// # Safety
// `result` must be null or a live handle.
size_t sf_result_p(const struct SfFilterResult *result);

// Non-zero off-diagonal pairs of the unfiltered matrix.
//
// # Safety
// `result` must be null or a live handle.
size_t sf_result_total_edges(const struct SfFilterResult *result);

// Copies a `p * p` matrix (symmetric, so row- and column-major agree) into `buf`.
//
// # Safety
// `result` must be a live handle and `buf` must hold `len` writable doubles.
enum SfStatus sf_result_copy_matrix(const struct SfFilterResult *result,
                                    enum SfMatrixWhich which,
                                    double *buf,
                                    size_t len);

// Copies the descending target spectrum (`p` values) into `buf`.
//
// # Safety
// `result` must be a live handle and `buf` must hold `len` writable doubles.
enum SfStatus sf_result_copy_target_spectrum(const struct SfFilterResult *result,
                                             double *buf,
                                             size_t len);

// # Safety
// `result` must be null or a handle not yet freed.
void sf_result_free(struct SfFilterResult *result);

// Ledoit-Wolf weights `alpha1` (identity) and `alpha2` (sample). With
// `correlation != 0` they are computed on the correlation scale.
//
// # Safety
// `data` must be a live handle; `alpha1` and `alpha2` writable.
enum SfStatus sf_ledoit_wolf(const struct SfData *data,
                             int32_t correlation,
                             double *alpha1,
                             double *alpha2);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SPARFILTER_H */
