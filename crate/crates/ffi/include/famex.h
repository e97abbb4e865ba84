#ifndef FAMEX_H
#define FAMEX_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum FamexStatus {
  FAMEX_STATUS_OK = 0,
  FAMEX_STATUS_NULL_POINTER = 1,
  FAMEX_STATUS_INVALID_ARGUMENT = 2,
  FAMEX_STATUS_IO = 3,
  FAMEX_STATUS_PARSE = 4,
  FAMEX_STATUS_DATA = 5,
  FAMEX_STATUS_OUT_OF_RANGE = 6,
  FAMEX_STATUS_PANIC = 7,
} FamexStatus;

typedef enum FamexGraphFormat {
  FAMEX_GRAPH_FORMAT_DOT = 0,
  FAMEX_GRAPH_FORMAT_JSON = 1,
} FamexGraphFormat;

typedef struct FamexDataset FamexDataset;

typedef struct FamexGraph FamexGraph;

typedef struct FamexScores FamexScores;

/**
 * Numeric scores of one feature; the name is fetched with `famex_scores_name`.
 */
typedef struct FamexFeatureScore {
  uint8_t grade;
  double similarity_score;
  double relevance;
  double relevance_score;
  double importance_score;
  /**
   * 1-based position in the importance ranking.
   */
  size_t rank;
} FamexFeatureScore;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing the last failure on this thread, or null if none.
 * The pointer stays valid until the next failing call on this thread.
 */
const char *famex_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *famex_version(void);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been freed already.
 */
void famex_string_free(char *s);

/**
 * Loads a CSV file. `class_col` may be null (last column), a header name or a 0-based index.
 *
 * # Safety
 * `path` and `class_col` must be null or NUL-terminated; `out` must be writable.
 */
enum FamexStatus famex_dataset_load_csv(const char *path,
                                        const char *class_col,
                                        struct FamexDataset **out);

/**
 * Parses CSV bytes held in memory.
 *
 * # Safety
 * `bytes` must point to `len` readable bytes; string arguments must be null or NUL-terminated.
 */
enum FamexStatus famex_dataset_parse_csv(const uint8_t *bytes,
                                         size_t len,
                                         const char *name,
                                         const char *class_col,
                                         struct FamexDataset **out);

/**
 * # Safety
 * `dataset` must be null or a handle from this library that has not been freed.
 */
void famex_dataset_free(struct FamexDataset *dataset);

/**
 * # Safety
 * `dataset` must be a live handle; `rows`, `features` and `classes` must be writable.
 */
enum FamexStatus famex_dataset_shape(const struct FamexDataset *dataset,
                                     size_t *rows,
                                     size_t *features,
                                     size_t *classes);

/**
 * Name of feature `index`; free the result with `famex_string_free`.
 *
 * # Safety
 * `dataset` must be a live handle; `out` must be writable.
 */
enum FamexStatus famex_dataset_feature_name(const struct FamexDataset *dataset,
                                            size_t index,
                                            char **out);

/**
 * Builds the feature association map. A negative `corr_decimals` compares raw correlations.
 *
 * # Safety
 * `dataset` must be a live handle; `out` must be writable.
 */
enum FamexStatus famex_graph_build(const struct FamexDataset *dataset,
                                   double low,
                                   double high,
                                   int32_t corr_decimals,
                                   struct FamexGraph **out);

/**
 * # Safety
 * `graph` must be null or a live handle.
 */
void famex_graph_free(struct FamexGraph *graph);

/**
 * # Safety
 * `graph` must be a live handle; `vertices` and `edges` must be writable.
 */
enum FamexStatus famex_graph_size(const struct FamexGraph *graph, size_t *vertices, size_t *edges);

/**
 * Grade (1, 2 or 3) of vertex `index`.
 *
 * # Safety
 * `graph` must be a live handle; `out` must be writable.
 */
enum FamexStatus famex_graph_grade(const struct FamexGraph *graph, size_t index, uint8_t *out);

/**
 * Serializes the graph; `format` is a `FamexGraphFormat` value. Free the
 * result with `famex_string_free`.
 *
 * # Safety
 * `graph` must be a live handle; `out` must be writable.
 */
enum FamexStatus famex_graph_export(const struct FamexGraph *graph, uint32_t format, char **out);

/**
 * Runs FAMeX scoring. A negative `corr_decimals` compares raw correlations.
 *
 * # Safety
 * `dataset` must be a live handle; `out` must be writable.
 */
enum FamexStatus famex_score(const struct FamexDataset *dataset,
                             size_t bins,
                             double low,
                             double high,
                             int32_t corr_decimals,
                             struct FamexScores **out);

/**
 * # Safety
 * `scores` must be null or a live handle.
 */
void famex_scores_free(struct FamexScores *scores);

/**
 * # Safety
 * `scores` must be a live handle; `out` must be writable.
 */
enum FamexStatus famex_scores_len(const struct FamexScores *scores, size_t *out);

/**
 * Scores of feature `index` (column order).
 *
 * # Safety
 * `scores` must be a live handle; `out` must be writable.
 */
enum FamexStatus famex_scores_get(const struct FamexScores *scores,
                                  size_t index,
                                  struct FamexFeatureScore *out);

/**
 * # Safety
 * `scores` must be a live handle; `out` must be writable.
 */
enum FamexStatus famex_scores_name(const struct FamexScores *scores, size_t index, char **out);

/**
 * Scores as JSON, identical to `famex score --format json`.
 *
 * # Safety
 * `scores` must be a live handle; `out` must be writable.
 */
enum FamexStatus famex_scores_to_json(const struct FamexScores *scores, char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FAMEX_H */
