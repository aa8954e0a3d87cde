#ifndef ABSA_H
#define ABSA_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum AbsaStatus {
  ABSA_STATUS_OK = 0,
  /**
   * Null pointer, invalid UTF-8 or an unknown enum name.
   */
  ABSA_STATUS_INVALID_ARGUMENT = 1,
  ABSA_STATUS_IO = 2,
  ABSA_STATUS_MALFORMED_INPUT = 3,
  ABSA_STATUS_SCHEMA_VIOLATION = 4,
  ABSA_STATUS_UNREPRESENTABLE = 5,
  ABSA_STATUS_MISMATCH = 6,
  ABSA_STATUS_BACKEND = 7,
  ABSA_STATUS_INTERNAL = 99,
} AbsaStatus;

/**
 * A loaded corpus.
 */
typedef struct AbsaCorpus AbsaCorpus;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. Valid until the
 * next call into the library on this thread; do not free.
 */
const char *absa_last_error(void);

/**
 * Library version, static.
 */
const char *absa_version(void);

/**
 * Frees a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void absa_string_free(char *s);

/**
 * Loads a SemEval XML gold file. `domain` is `laptops` or `restaurants`,
 * `split` is `train` or `test`.
 *
 * # Safety
 * String arguments must be NUL-terminated; `out` must be writable.
 */
enum AbsaStatus absa_corpus_load_xml(const char *path,
                                     const char *domain,
                                     const char *split,
                                     struct AbsaCorpus **out);

/**
 * Loads a corpus saved as JSONL.
 *
 * # Safety
 * `path` must be NUL-terminated; `out` must be writable.
 */
enum AbsaStatus absa_corpus_load_jsonl(const char *path, struct AbsaCorpus **out);

/**
 * Frees a corpus handle. Null is ignored.
 *
 * # Safety
 * `corpus` must come from a load function and not have been freed.
 */
void absa_corpus_free(struct AbsaCorpus *corpus);

/**
 * Number of sentences; 0 for a null handle.
 *
 * # Safety
 * `corpus` must be null or a live handle.
 */
size_t absa_corpus_len(const struct AbsaCorpus *corpus);

/**
 * Corpus statistics as a JSON object.
 *
 * # Safety
 * `corpus` must be a live handle; `out` must be writable.
 */
enum AbsaStatus absa_corpus_stats_json(const struct AbsaCorpus *corpus, char **out);

/**
 * Renders the corpus into prompted examples and writes them as JSONL to
 * `out_path`. With `eval` false, sentences whose gold cannot be rendered are
 * left out and counted in `excluded` (which may be null).
 *
 * # Safety
 * `corpus` must be a live handle; strings NUL-terminated.
 */
enum AbsaStatus absa_build_prompts(const struct AbsaCorpus *corpus,
                                   const char *subtask,
                                   const char *variant,
                                   bool eval,
                                   const char *out_path,
                                   size_t *examples,
                                   size_t *excluded);

/**
 * Parses one raw model output into its JSON prediction.
 *
 * # Safety
 * Strings must be NUL-terminated; `out` must be writable.
 */
enum AbsaStatus absa_parse_output(const char *subtask, const char *raw, char **out);

/**
 * Scores a predictions JSONL file against the gold corpus (micro
 * averaging, conflict aspects dropped) and returns the report as JSON.
 *
 * # Safety
 * `gold` must be a live handle; strings NUL-terminated; `out` writable.
 */
enum AbsaStatus absa_score(const struct AbsaCorpus *gold,
                           const char *subtask,
                           const char *predictions_path,
                           char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ABSA_H */
