#ifndef DIPROPERM_H
#define DIPROPERM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum DppStatus {
  DPP_STATUS_OK = 0,
  DPP_STATUS_NULL_POINTER = 1,
  DPP_STATUS_INVALID_UTF8 = 2,
  DPP_STATUS_IO = 3,
  DPP_STATUS_PARSE = 4,
  DPP_STATUS_INVALID_DATA = 5,
  DPP_STATUS_INVALID_ARGUMENT = 6,
  DPP_STATUS_NOT_CONVERGED = 7,
  DPP_STATUS_NUMERIC = 8,
  DPP_STATUS_BUFFER_TOO_SMALL = 9,
  DPP_STATUS_PANIC = 10,
} DppStatus;

typedef enum DppClassifier {
  DPP_CLASSIFIER_DWD = 0,
  DPP_CLASSIFIER_MD = 1,
} DppClassifier;

typedef enum DppStatistic {
  DPP_STATISTIC_MD = 0,
  DPP_STATISTIC_T = 1,
  DPP_STATISTIC_MED = 2,
} DppStatistic;

typedef enum DppScheme {
  DPP_SCHEME_BALANCED = 0,
  DPP_SCHEME_UNBALANCED = 1,
} DppScheme;

/**
 * Opaque dataset handle.
 */
typedef struct DppDataset DppDataset;

/**
 * Opaque result handle.
 */
typedef struct DppResult DppResult;

/**
 * Run configuration. Enumerated fields hold `DppClassifier`, `DppStatistic`
 * and `DppScheme` values; anything else is rejected.
 */
typedef struct DppConfig {
  uint32_t classifier;
  uint32_t statistic;
  uint32_t scheme;
  size_t permutations;
  uint64_t seed;
  double alpha;
  double tol;
  size_t max_iter;
  /**
   * Worker threads; 0 picks the number of available cores.
   */
  size_t workers;
  bool retain_all;
} DppConfig;

/**
 * Headline numbers of a finished run.
 */
typedef struct DppSummary {
  double statistic;
  double p_value;
  /**
   * Meaningful only when `has_z_score` is true.
   */
  double z_score;
  bool has_z_score;
  double cutoff;
  size_t permutations;
  size_t n_samples;
  size_t n_features;
} DppSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failure on this thread, or null. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *dpp_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *dpp_version(void);

struct DppConfig dpp_config_default(void);

/**
 * Builds a dataset from `n_samples * n_features` row-major values and
 * `n_samples` labels in {-1, 1}.
 */
enum DppStatus dpp_dataset_new(const double *features,
                               size_t n_samples,
                               size_t n_features,
                               const int8_t *labels,
                               struct DppDataset **out);

/**
 * Loads a sparse `label index:value` file.
 */
enum DppStatus dpp_dataset_load_sparse(const char *path, struct DppDataset **out);

/**
 * Loads a dense CSV file. `label_column` is a 0-based column index, or
 * negative when labels come from `labels_path` (which may then not be null).
 */
enum DppStatus dpp_dataset_load_dense(const char *path,
                                      bool has_header,
                                      ptrdiff_t label_column,
                                      const char *labels_path,
                                      struct DppDataset **out);

size_t dpp_dataset_n_samples(const struct DppDataset *dataset);

size_t dpp_dataset_n_features(const struct DppDataset *dataset);

void dpp_dataset_free(struct DppDataset *dataset);

/**
 * Runs the test. `config` may be null for the defaults.
 */
enum DppStatus dpp_run(const struct DppDataset *dataset,
                       const struct DppConfig *config,
                       struct DppResult **out);

enum DppStatus dpp_result_summary(const struct DppResult *result, struct DppSummary *out);

/**
 * Copies the B permutation statistics (in permutation order) into `buf`.
 */
enum DppStatus dpp_result_perm_statistics(const struct DppResult *result,
                                          double *buf,
                                          size_t len,
                                          size_t *written);

/**
 * Copies the unit direction vector into `buf` and the intercept into
 * `beta` (when non-null).
 */
enum DppStatus dpp_result_direction(const struct DppResult *result,
                                    double *buf,
                                    size_t len,
                                    size_t *written,
                                    double *beta);

/**
 * The `loadnum` largest loadings by magnitude: 1-based variable indices
 * and signed values, each into a caller buffer of `loadnum` slots.
 */
enum DppStatus dpp_result_loadings(const struct DppResult *result,
                                   size_t loadnum,
                                   size_t *indices,
                                   double *values);

/**
 * Writes the full result document as JSON.
 */
enum DppStatus dpp_result_write_json(const struct DppResult *result, const char *path);

void dpp_result_free(struct DppResult *result);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DIPROPERM_H */
