#ifndef THETARANK_H
#define THETARANK_H

/* C interface to the ranked theta-join engine. Every function returning
 * tr_status sets a thread-local message readable with tr_last_error() on
 * failure. Strings returned through char** are owned by the caller and
 * released with tr_string_free(). */

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(__GNUC__)
#define TR_API __attribute__((visibility("default")))
#else
#define TR_API
#endif

typedef enum tr_status {
  TR_OK = 0,
  TR_ERR_IO = 1,
  TR_ERR_PARSE = 2,
  TR_ERR_SCHEMA = 3,
  TR_ERR_UNSUPPORTED = 4,
  TR_ERR_GUARD = 5,
  TR_ERR_INVALID_ARGUMENT = 6,
  TR_ERR_INTERNAL = 7
} tr_status;

typedef struct tr_query tr_query;
typedef struct tr_engine tr_engine;
typedef struct tr_cursor tr_cursor;

TR_API const char* tr_last_error(void);
TR_API const char* tr_status_name(tr_status status);
TR_API void tr_string_free(char* s);

/* Query specification (JSON; see README). */
TR_API tr_status tr_query_load(const char* path, tr_query** out);
TR_API tr_status tr_query_parse(const char* json, const char* base_dir,
                                tr_query** out);
TR_API void tr_query_free(tr_query* q);
/* Limit from the spec, or -1. */
TR_API int64_t tr_query_limit(const tr_query* q);
/* Method from the spec, or NULL. Valid while q lives. */
TR_API const char* tr_query_method(const tr_query* q);

/* method: auto, binary, multiway, shared, direct, quadequi or batch;
 * NULL means the spec's method, else auto. */
TR_API tr_status tr_engine_create(const tr_query* q, const char* method,
                                  int unranked, tr_engine** out);
TR_API void tr_engine_free(tr_engine* e);
TR_API tr_status tr_engine_explain(const tr_engine* e, char** out);
/* Attribute columns of all atoms plus the trailing "weight". */
TR_API size_t tr_engine_column_count(const tr_engine* e);
TR_API const char* tr_engine_column_name(const tr_engine* e, size_t i);

/* A cursor keeps its engine's data alive. */
TR_API tr_status tr_cursor_open(const tr_engine* e, tr_cursor** out);
/* Writes the attribute values of the next answer into values (capacity
 * at least column_count - 1) and its weight. *has_row is 0 at the end. */
TR_API tr_status tr_cursor_next(tr_cursor* c, double* values, size_t capacity,
                                double* weight, int* has_row);
/* Tuple ids of the last answer, one per atom. */
TR_API tr_status tr_cursor_choice(const tr_cursor* c, uint32_t* tids,
                                  size_t capacity, size_t* atoms);
TR_API tr_status tr_cursor_stats_json(const tr_cursor* c, char** out);
TR_API void tr_cursor_free(tr_cursor* c);

/* Writes S1.csv .. S<l>.csv (columns A<2i-1>, A<2i>, W) into out_dir. */
TR_API tr_status tr_generate(size_t n, size_t l, uint64_t seed,
                             const char* out_dir);
/* Runs a benchmark suite (smoke, scaling, methods) into a CSV file. */
TR_API tr_status tr_bench(const char* suite, uint64_t seed, const char* out_csv);

#ifdef __cplusplus
}
#endif

#endif /* THETARANK_H */
