/* C interface to the qtune parameter tuner.
 *
 * All functions return a qtune_status. On failure the message describing the
 * error is available from qtune_last_error() on the same thread until the
 * next call into the library.
 */
#ifndef QTUNE_QTUNE_H
#define QTUNE_QTUNE_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(QTUNE_BUILDING_LIBRARY)
#    define QTUNE_API __declspec(dllexport)
#  else
#    define QTUNE_API __declspec(dllimport)
#  endif
#else
#  define QTUNE_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum qtune_status {
  QTUNE_OK = 0,
  QTUNE_ERR_INVALID_ARGUMENT = 1, /* null handle or pointer */
  QTUNE_ERR_CONFIG = 2,
  QTUNE_ERR_PARSE = 3,
  QTUNE_ERR_RANGE = 4,
  QTUNE_ERR_IO = 5,
  QTUNE_ERR_DATASET = 6,
  QTUNE_ERR_PIPELINE = 7,
  QTUNE_ERR_NUMERIC = 8,
  QTUNE_ERR_BUSY = 9,
  QTUNE_ERR_BUFFER_TOO_SMALL = 10,
  QTUNE_ERR_INTERNAL = 99
} qtune_status;

/* Opaque: configuration, dataset, pipeline cache and the last Q-table. */
typedef struct qtune_session qtune_session;

typedef struct qtune_generate_summary {
  size_t count;
  uint64_t seed;
} qtune_generate_summary;

typedef struct qtune_train_summary {
  size_t best_action;
  double best_mean_d;
  size_t episodes;
  size_t q_states; /* materialized Q-table rows */
} qtune_train_summary;

typedef struct qtune_grid_summary {
  size_t best_action;
  double best_mean_d;
  size_t rows;
} qtune_grid_summary;

typedef struct qtune_eval_summary {
  size_t action;
  double x1, x2, x3, x4;
  int has_reference; /* when 0 the fields below are unset */
  double d1, d2, d3, d4;
  double d;
  double reward;
  int terminal;
} qtune_eval_summary;

typedef struct qtune_cache_stats {
  size_t hits;
  size_t misses;
} qtune_cache_stats;

QTUNE_API const char* qtune_version(void);
QTUNE_API const char* qtune_status_string(qtune_status status);
QTUNE_API const char* qtune_last_error(void);

QTUNE_API qtune_status qtune_session_create_from_file(const char* config_path, qtune_session** out);
QTUNE_API qtune_status qtune_session_create_from_json(const char* config_json, qtune_session** out);
QTUNE_API void qtune_session_destroy(qtune_session* session);

/* Replaces the run seed; a synthetic dataset is regenerated on next use. */
QTUNE_API qtune_status qtune_session_set_seed(qtune_session* session, uint64_t seed);
QTUNE_API qtune_status qtune_session_set_output_dir(qtune_session* session, const char* dir);

/* Copies the effective configuration as JSON into buf. When buf is too small
 * *needed receives the required size including the terminator. */
QTUNE_API qtune_status qtune_session_config_json(const qtune_session* session, char* buf, size_t len, size_t* needed);

QTUNE_API qtune_status qtune_action_count(const qtune_session* session, size_t* out);
QTUNE_API qtune_status qtune_action_describe(const qtune_session* session, size_t index, char* buf, size_t len,
                                             size_t* needed);
QTUNE_API qtune_status qtune_action_parse(const qtune_session* session, const char* text, size_t* index);

QTUNE_API qtune_status qtune_generate(qtune_session* session, qtune_generate_summary* out);
QTUNE_API qtune_status qtune_train(qtune_session* session, qtune_train_summary* out);
QTUNE_API qtune_status qtune_gridsearch(qtune_session* session, qtune_grid_summary* out);

/* mask_path may be NULL. dump_features writes features_*.csv planes. */
QTUNE_API qtune_status qtune_evaluate(qtune_session* session, const char* action, const char* image_path,
                                      const char* mask_path, int dump_features, qtune_eval_summary* out);

QTUNE_API qtune_status qtune_cache_stats_get(const qtune_session* session, qtune_cache_stats* out);

#ifdef __cplusplus
}
#endif

#endif /* QTUNE_QTUNE_H */
