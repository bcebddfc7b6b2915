#ifndef S3DC_S3DC_H
#define S3DC_S3DC_H

#include <stddef.h>
#include <stdint.h>

#if defined(S3DC_BUILDING_LIBRARY)
#define S3DC_API __attribute__((visibility("default")))
#else
#define S3DC_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes. Values other than S3DC_OK mirror the library's error kinds. */
typedef enum s3dc_status {
  S3DC_OK = 0,
  S3DC_ERR_DOMAIN = 1,
  S3DC_ERR_PARSE = 2,
  S3DC_ERR_IO = 3,
  S3DC_ERR_FORMAT = 4,
  S3DC_ERR_BAD_MAGIC = 5,
  S3DC_ERR_TRUNCATED = 6,
  S3DC_ERR_UNKNOWN_VERSION = 7,
  S3DC_ERR_BACKEND = 8,
  S3DC_ERR_VALIDATION = 9,
  S3DC_ERR_CONFLICT = 10,
  S3DC_ERR_NOT_FOUND = 11,
  S3DC_ERR_NO_OBJECT = 12,
  S3DC_ERR_EMPTY_DESCRIPTOR = 13,
  S3DC_ERR_USAGE = 14,
  S3DC_ERR_INTERNAL = 100
} s3dc_status;

typedef enum s3dc_mode { S3DC_MODE_SEMANTIC = 0, S3DC_MODE_STRUCTURED = 1 } s3dc_mode;

/* Message of the last failing call on this thread; "" after success. The
   pointer stays valid until the next call on the same thread. */
S3DC_API const char* s3dc_last_error(void);
S3DC_API const char* s3dc_status_name(s3dc_status status);

/* ---- backend settings ---------------------------------------------------- */

typedef struct s3dc_settings s3dc_settings;

/* Reads a key=value config file (NULL for none) and applies environment
   overrides, including credentials. */
S3DC_API s3dc_status s3dc_settings_load(const char* config_path, s3dc_settings** out);
/* Offline deterministic backends. */
S3DC_API s3dc_status s3dc_settings_mock(uint64_t seed, s3dc_settings** out);
/* Switches every backend to its mock with the given seed. */
S3DC_API s3dc_status s3dc_settings_use_mock(s3dc_settings* settings, uint64_t seed);
S3DC_API int s3dc_settings_is_mock(const s3dc_settings* settings);
S3DC_API void s3dc_settings_free(s3dc_settings* settings);

/* ---- compression --------------------------------------------------------- */

typedef struct s3dc_compress_options {
  s3dc_mode mode;
  uint32_t char_budget;    /* d */
  uint32_t edge_threshold; /* t; 0 means none (semantic mode) */
  uint32_t resolution;     /* view resolution; 0 keeps the default */
} s3dc_compress_options;

typedef struct s3dc_compressed s3dc_compressed;

S3DC_API s3dc_status s3dc_compress(const char* obj_path, const s3dc_compress_options* options,
                                   const s3dc_settings* settings, s3dc_compressed** out);
/* Packed container bytes, owned by the handle. */
S3DC_API const uint8_t* s3dc_compressed_data(const s3dc_compressed* c, size_t* size);
S3DC_API uint64_t s3dc_compressed_original_bytes(const s3dc_compressed* c);
S3DC_API double s3dc_compressed_ratio(const s3dc_compressed* c);
S3DC_API const char* s3dc_compressed_descriptor(const s3dc_compressed* c);
/* Number of stored edge pixels; 0 in semantic mode. */
S3DC_API uint64_t s3dc_compressed_edge_count(const s3dc_compressed* c);
S3DC_API void s3dc_compressed_free(s3dc_compressed* c);

/* Decompresses a container file into `out_dir`. Writes object.obj with its
   material files and primary_view.png, and copies the container to
   source.s3dc so the directory can be evaluated later. */
S3DC_API s3dc_status s3dc_decompress_file(const char* container_path, const s3dc_settings* settings,
                                          const char* out_dir);

/* ---- traditional baseline ------------------------------------------------ */

typedef struct s3dc_baseline_info {
  uint64_t original_triangles;
  uint64_t triangles;
  uint64_t original_bytes;
  uint64_t bytes;
  double ratio;
} s3dc_baseline_info;

/* Decimates to `ratio` of the triangles and recodes the texture as JPEG at
   `quality`; writes object.obj and friends into `out_dir`. */
S3DC_API s3dc_status s3dc_baseline(const char* obj_path, double ratio, int quality, const char* out_dir,
                                   s3dc_baseline_info* info);

/* ---- evaluation ---------------------------------------------------------- */

typedef struct s3dc_eval_options {
  double distance_threshold; /* 0 keeps 0.05 */
  uint32_t sample_count;     /* 0 keeps 10000 */
  uint64_t seed;
} s3dc_eval_options;

typedef struct s3dc_report s3dc_report;

/* A candidate path is an OBJ file or a decompress output directory; in the
   latter case the ratio is sized by its source.s3dc. `rankings_path` (may be
   NULL) holds one ranking per line: candidate indices best to worst. */
S3DC_API s3dc_status s3dc_evaluate(const char* original_path, const char* const* labels,
                                   const char* const* paths, size_t count, const char* rankings_path,
                                   const s3dc_eval_options* options, const s3dc_settings* settings,
                                   s3dc_report** out);
S3DC_API const char* s3dc_report_csv(const s3dc_report* report);
S3DC_API const char* s3dc_report_table(const s3dc_report* report);
S3DC_API void s3dc_report_free(s3dc_report* report);

/* ---- edge sparsity ------------------------------------------------------- */

S3DC_API double s3dc_breakeven_sparsity(uint32_t resolution);

/* Profiles every PNG/JPEG in `views_dir`. The returned table is freed with
   s3dc_string_free. */
S3DC_API s3dc_status s3dc_profile_sparsity(const char* views_dir, const int* resolutions, size_t resolution_count,
                                           const double* thresholds, size_t threshold_count, char** table);
S3DC_API void s3dc_string_free(char* text);

/* ---- ranking service ----------------------------------------------------- */

typedef struct s3dc_rank_server s3dc_rank_server;

/* Opens the store in `data_dir` and binds host:port (port 0 picks one).
   `static_dir` (may be NULL) is served under /ui. */
S3DC_API s3dc_status s3dc_rank_server_create(const char* data_dir, const char* static_dir, const char* host,
                                             int port, s3dc_rank_server** out);
S3DC_API int s3dc_rank_server_port(const s3dc_rank_server* server);
/* Blocks until s3dc_rank_server_stop is called from another thread. */
S3DC_API s3dc_status s3dc_rank_server_run(s3dc_rank_server* server);
S3DC_API void s3dc_rank_server_stop(s3dc_rank_server* server);
S3DC_API void s3dc_rank_server_free(s3dc_rank_server* server);

#ifdef __cplusplus
}
#endif

#endif /* S3DC_S3DC_H */
