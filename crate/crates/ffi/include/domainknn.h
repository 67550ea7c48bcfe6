/* C interface of the domainknn sentence classification engine. */

#ifndef DOMAINKNN_H
#define DOMAINKNN_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes for every fallible call.
 */
typedef enum DkStatus {
  DK_OK = 0,
  /**
   * A required pointer argument was NULL.
   */
  DK_ERR_NULL_ARGUMENT = 1,
  /**
   * An input string was not valid UTF-8.
   */
  DK_ERR_INVALID_UTF8 = 2,
  /**
   * File could not be read or written.
   */
  DK_ERR_IO = 3,
  /**
   * Corpus or resource file content was rejected.
   */
  DK_ERR_CORPUS = 4,
  /**
   * Knowledge-base file is corrupt or has an unsupported version.
   */
  DK_ERR_KB_FORMAT = 5,
  /**
   * A parameter is out of range, unknown, or does not match the base.
   */
  DK_ERR_CONFIG = 6,
  /**
   * The query could not be answered (empty base, bad k, zero vector).
   */
  DK_ERR_QUERY = 7,
  /**
   * Unexpected internal failure.
   */
  DK_ERR_INTERNAL = 8,
} DkStatus;

/**
 * Opaque classifier: a loaded knowledge base plus the pipeline resources
 * it was built with.
 */
typedef struct DkClassifier DkClassifier;

/**
 * Per-call classification parameters. Obtain defaults from
 * [`dk_classify_options_default`]; `metric` may be NULL for cosine.
 */
typedef struct DkClassifyOptions {
  /**
   * Metric name: cosine|euclidean|manhattan|chebyshev|canberra|hamming.
   */
  const char *metric;
  uint32_t k;
  /**
   * Membership cutoff on the minimum cosine distance.
   */
  double threshold;
  /**
   * Multiplier applied to out-of-vocabulary term counts.
   */
  double penalty;
  /**
   * Worker threads for the row scan; never affects results.
   */
  uint32_t workers;
} DkClassifyOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static string; do not free.
 */
const char *dk_version(void);

/**
 * Message of the most recent error on this thread, or NULL. The caller
 * owns the returned string and frees it with [`dk_string_free`].
 */
char *dk_last_error_message(void);

/**
 * Frees a string returned by this library. NULL is a no-op.
 *
 * # Safety
 * `s` must be a pointer previously returned by a `dk_*` function and not
 * yet freed.
 */
void dk_string_free(char *s);

/**
 * Builds a knowledge base from a corpus file and writes it to `out_path`.
 * When `out_summary_json` is non-NULL it receives a JSON build summary
 * (caller-owned).
 *
 * # Safety
 * `corpus_path` and `out_path` must be valid NUL-terminated strings;
 * optional pointers may be NULL. `out_summary_json`, when non-NULL, must
 * point to writable storage for one `char*`.
 */
enum DkStatus dk_build_kb(const char *corpus_path,
                          const char *out_path,
                          const char *stopwords_path,
                          const char *lemmas_path,
                          const char *mode,
                          char **out_summary_json);

/**
 * Loads a knowledge base and the pipeline resources to query it with.
 * Returns NULL on failure (see [`dk_last_error_message`]).
 *
 * # Safety
 * `kb_path` must be a valid NUL-terminated string; optional pointers may
 * be NULL. The handle must be released with [`dk_classifier_free`].
 */
struct DkClassifier *dk_classifier_open(const char *kb_path,
                                        const char *stopwords_path,
                                        const char *lemmas_path,
                                        const char *mode);

/**
 * Releases a classifier handle. NULL is a no-op.
 *
 * # Safety
 * `handle` must come from [`dk_classifier_open`] and not be used again.
 */
void dk_classifier_free(struct DkClassifier *handle);

/**
 * Number of knowledge-base rows; 0 for NULL.
 *
 * # Safety
 * `handle` must be NULL or a live classifier handle.
 */
uint64_t dk_classifier_rows(const struct DkClassifier *handle);

/**
 * Number of classes; 0 for NULL.
 *
 * # Safety
 * `handle` must be NULL or a live classifier handle.
 */
uint64_t dk_classifier_classes(const struct DkClassifier *handle);

/**
 * Vocabulary size; 0 for NULL.
 *
 * # Safety
 * `handle` must be NULL or a live classifier handle.
 */
uint64_t dk_classifier_vocab_size(const struct DkClassifier *handle);

/**
 * Name of the class with the given id, or NULL when out of range. The
 * caller owns the returned string.
 *
 * # Safety
 * `handle` must be NULL or a live classifier handle.
 */
char *dk_classifier_category(const struct DkClassifier *handle, uint64_t index);

/**
 * Engine defaults: cosine metric, k 1, threshold 0.5, penalty 2.5, one
 * worker.
 */
struct DkClassifyOptions dk_classify_options_default(void);

/**
 * Classifies `text` and stores the result JSON (the same object the CLI
 * prints) in `out_json`, caller-owned. `options` may be NULL for defaults.
 *
 * # Safety
 * `handle` must be a live classifier handle, `text` a valid
 * NUL-terminated string, and `out_json` writable storage for one `char*`.
 * When `options` is non-NULL, its `metric` field must be NULL or a valid
 * NUL-terminated string.
 */
enum DkStatus dk_classifier_classify_json(const struct DkClassifier *handle,
                                          const char *text,
                                          const struct DkClassifyOptions *options,
                                          char **out_json);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* DOMAINKNN_H */
