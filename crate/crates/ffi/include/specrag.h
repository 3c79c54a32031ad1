#ifndef SPECRAG_H
#define SPECRAG_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every call. Values 1 to 10 match the command-line exit codes.
 */
typedef enum SpecragStatus {
  SPECRAG_STATUS_OK = 0,
  SPECRAG_STATUS_IO = 1,
  SPECRAG_STATUS_INVALID_INPUT = 2,
  SPECRAG_STATUS_DOCUMENT = 3,
  SPECRAG_STATUS_STRATEGY = 4,
  SPECRAG_STATUS_PROVIDER = 5,
  SPECRAG_STATUS_PROVIDER_MISMATCH = 6,
  SPECRAG_STATUS_INDEX = 7,
  SPECRAG_STATUS_BENCHMARK = 8,
  SPECRAG_STATUS_PROTOCOL = 9,
  SPECRAG_STATUS_NOT_FOUND = 10,
  SPECRAG_STATUS_NULL_ARGUMENT = 20,
  SPECRAG_STATUS_INVALID_UTF8 = 21,
  SPECRAG_STATUS_PANIC = 22,
} SpecragStatus;

/**
 * Parsed OpenAPI document.
 */
typedef struct SpecragDocument SpecragDocument;

/**
 * Vector index built with the local embedder.
 */
typedef struct SpecragIndex SpecragIndex;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. Valid until the
 * next failing call on the same thread; do not free.
 */
const char *specrag_last_error(void);

/**
 * # Safety
 * `s` must be NULL or a string returned by this library.
 */
void specrag_string_free(char *s);

/**
 * Parses a JSON or YAML OpenAPI document of `len` bytes.
 *
 * # Safety
 * `bytes` must point to `len` readable bytes, `source_name` to a C string
 * and `out` to writable storage for one pointer.
 */
enum SpecragStatus specrag_document_parse(const uint8_t *bytes,
                                          size_t len,
                                          const char *source_name,
                                          struct SpecragDocument **out);

/**
 * # Safety
 * `doc` must be NULL or a handle from [`specrag_document_parse`].
 */
void specrag_document_free(struct SpecragDocument *doc);

/**
 * # Safety
 * `doc` must be a live document handle and `out` writable.
 */
enum SpecragStatus specrag_document_endpoint_count(const struct SpecragDocument *doc, size_t *out);

/**
 * JSON array of `"VERB /path"` strings in document order.
 *
 * # Safety
 * `doc` must be a live document handle and `out` writable.
 */
enum SpecragStatus specrag_document_endpoints_json(const struct SpecragDocument *doc, char **out);

/**
 * Serialized endpoint for a verb (any case) and exact path.
 *
 * # Safety
 * `doc` must be a live document handle, `verb` and `path` C strings and
 * `out` writable.
 */
enum SpecragStatus specrag_document_endpoint_details(const struct SpecragDocument *doc,
                                                     const char *verb,
                                                     const char *path,
                                                     char **out);

/**
 * Chunks a document and returns the chunks as a JSON array. `splitting` is
 * `none`, `endpoint` or `json`; `refinement` one of `token-chunking`,
 * `remove-examples` or `relevant-fields`. `chunk_size` and `overlap` are
 * only read for token chunking. Chunks record the local embedder of
 * `dimension` as their embedding model.
 *
 * # Safety
 * `doc` must be a live document handle, the strings C strings and `out`
 * writable.
 */
enum SpecragStatus specrag_chunk_json(const struct SpecragDocument *doc,
                                      const char *splitting,
                                      const char *refinement,
                                      size_t chunk_size,
                                      size_t overlap,
                                      size_t dimension,
                                      char **out);

/**
 * Builds an index from a JSON array of chunks with the local embedder.
 *
 * # Safety
 * `chunks_json` must be a C string and `out` writable.
 */
enum SpecragStatus specrag_index_build_local(const char *chunks_json,
                                             size_t dimension,
                                             struct SpecragIndex **out);

/**
 * # Safety
 * `index` must be NULL or a handle from this library.
 */
void specrag_index_free(struct SpecragIndex *index);

/**
 * # Safety
 * `index` must be a live handle and `out` writable.
 */
enum SpecragStatus specrag_index_len(const struct SpecragIndex *index, size_t *out);

/**
 * Top-`k` retrieval; the result is a JSON retrieval record.
 *
 * # Safety
 * `index` must be a live handle, `query` a C string and `out` writable.
 */
enum SpecragStatus specrag_index_query_json(const struct SpecragIndex *index,
                                            const char *query,
                                            size_t k,
                                            char **out);

/**
 * # Safety
 * `index` must be a live handle and `path` a C string.
 */
enum SpecragStatus specrag_index_save(const struct SpecragIndex *index, const char *path);

/**
 * Loads an index file written by a local embedder.
 *
 * # Safety
 * `path` must be a C string and `out` writable.
 */
enum SpecragStatus specrag_index_load(const char *path, struct SpecragIndex **out);

/**
 * Recall, precision and F1 of two JSON arrays of `"VERB /path"` strings.
 *
 * # Safety
 * Both inputs must be C strings and the three outputs writable.
 */
enum SpecragStatus specrag_compute_metrics(const char *predicted_json,
                                           const char *gold_json,
                                           double *recall,
                                           double *precision,
                                           double *f1);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SPECRAG_H */
