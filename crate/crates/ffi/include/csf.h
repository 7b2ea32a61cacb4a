#ifndef CSF_H
#define CSF_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result of every fallible call.
typedef enum CsfStatus {
  CSF_STATUS_OK = 0,
  CSF_STATUS_NULL_POINTER = 1,
  // Bad configuration, unknown method, non-UTF-8 string.
  CSF_STATUS_INVALID_ARGUMENT = 2,
  // Malformed scan, world or feature-map text.
  CSF_STATUS_PARSE = 3,
  // Input that is well formed but inconsistent.
  CSF_STATUS_VALIDATION = 4,
  // Coincident points, isotropic scatter, a point at the origin.
  CSF_STATUS_DEGENERATE = 5,
  CSF_STATUS_PARALLEL_LINES = 6,
  CSF_STATUS_MISSING_COVARIANCE = 7,
  CSF_STATUS_IO = 8,
  // Index past the end of a collection.
  CSF_STATUS_OUT_OF_RANGE = 9,
  // Internal error; the message says more.
  CSF_STATUS_PANIC = 10,
} CsfStatus;

// Line estimator.
typedef enum CsfMethod {
  // Linear fit of the inversion point `(x_q, y_q)`.
  CSF_METHOD_WCLM = 0,
  // Polar `(r, alpha)` regression.
  CSF_METHOD_ARRAS = 1,
  // Implicit `(a, b, c)` total least squares.
  CSF_METHOD_SIADAT = 2,
} CsfMethod;

// Opaque feature-map handle.
typedef struct CsfFeatureMap CsfFeatureMap;

// Opaque scan handle.
typedef struct CsfScan CsfScan;

// Fitted line parameters with their covariance.
typedef struct CsfLine {
  enum CsfMethod method;
  // `(x_q, y_q)`, `(r, alpha)` or `(a, b, c)`; unused entries are zero.
  double params[3];
  size_t n_params;
  // Row-major `n_params x n_params` covariance in the leading entries.
  double cov[9];
  // Perpendicular distance and normal bearing, whatever the method.
  double r;
  double alpha;
  // False when the covariance comes from a near-degenerate configuration.
  bool cov_reliable;
  // First and last scan index of the supporting span, and its size.
  size_t start_index;
  size_t end_index;
  size_t count;
} CsfLine;

// Segmentation and propagation settings for [`csf_extract`]. Start from
// [`csf_extract_options_default`].
typedef struct CsfExtractOptions {
  double threshold_m;
  size_t min_points;
  double max_range_m;
  double gate_m;
  // Range deviation (m) for weighting and propagation; negative uses the scan header.
  double sigma_rho;
  // Bearing deviation (rad); negative uses the scan header.
  double sigma_theta;
  // Weight every point equally.
  bool unit_weights;
} CsfExtractOptions;

// Corner position with its covariance.
typedef struct CsfCorner {
  double x;
  double y;
  // Row-major 2x2 covariance; zero when `has_cov` is false.
  double cov[4];
  bool has_cov;
  // Ids of the two source lines, or `SIZE_MAX` when unknown.
  size_t line_a;
  size_t line_b;
} CsfCorner;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Version string of the library, static storage.
const char *csf_version(void);

// Message of the last failed call on this thread, or an empty string. The
// pointer stays valid until the next call on the same thread.
const char *csf_last_error(void);

// Releases a string returned by this library. Null is ignored.
//
// # Safety
// `s` must come from this library and not have been freed.
void csf_string_free(char *s);

// Builds a scan from `n` range/bearing pairs (m, rad) and the sensor noise.
//
// # Safety
// `rho` and `theta` must point to `n` readable doubles; `out` must be writable.
enum CsfStatus csf_scan_new(const double *rho,
                            const double *theta,
                            size_t n,
                            double sigma_rho,
                            double sigma_theta,
                            struct CsfScan **out);

// Reads a scan file.
//
// # Safety
// `path` must be a nul-terminated string; `out` must be writable.
enum CsfStatus csf_scan_load(const char *path, struct CsfScan **out);

// Writes a scan file.
//
// # Safety
// `scan` must be a live handle and `path` a nul-terminated string.
enum CsfStatus csf_scan_save(const struct CsfScan *scan, const char *path);

// Ray-casts a scan of the world file from pose `(x, y, heading)` (m, m, rad)
// with `n_rays` bearings over a full turn and the given noise.
//
// # Safety
// `world_path` must be a nul-terminated string; `out` must be writable.
enum CsfStatus csf_scan_generate(const char *world_path,
                                 double x,
                                 double y,
                                 double heading,
                                 size_t n_rays,
                                 double sigma_rho,
                                 double sigma_theta,
                                 uint64_t seed,
                                 struct CsfScan **out);

// Number of samples, or 0 for a null handle.
//
// # Safety
// `scan` must be null or a live handle.
size_t csf_scan_len(const struct CsfScan *scan);

// Copies sample `i` as range and bearing.
//
// # Safety
// `scan` must be a live handle; `rho` and `theta` must be writable.
enum CsfStatus csf_scan_point(const struct CsfScan *scan, size_t i, double *rho, double *theta);

// Releases a scan. Null is ignored.
//
// # Safety
// `scan` must be null or a handle from this library that was not yet freed.
void csf_scan_free(struct CsfScan *scan);

// Fits one line to `n` range/bearing pairs and propagates the given noise.
// The span fields of the result index the input arrays.
//
// # Safety
// `rho` and `theta` must point to `n` readable doubles; `out` must be writable.
enum CsfStatus csf_fit_line(enum CsfMethod method,
                            const double *rho,
                            const double *theta,
                            size_t n,
                            double sigma_rho,
                            double sigma_theta,
                            struct CsfLine *out);

// Defaults used by the command line tool.
struct CsfExtractOptions csf_extract_options_default(void);

// Segments `scan`, fits every span with `method` and intersects adjacent
// lines. `options` may be null for the defaults.
//
// # Safety
// `scan` must be a live handle, `options` null or readable, `out` writable.
enum CsfStatus csf_extract(const struct CsfScan *scan,
                           enum CsfMethod method,
                           const struct CsfExtractOptions *options,
                           struct CsfFeatureMap **out);

// Reads a feature-map JSON file.
//
// # Safety
// `path` must be a nul-terminated string; `out` must be writable.
enum CsfStatus csf_feature_map_load(const char *path, struct CsfFeatureMap **out);

// Writes a feature-map JSON file.
//
// # Safety
// `map` must be a live handle and `path` a nul-terminated string.
enum CsfStatus csf_feature_map_save(const struct CsfFeatureMap *map, const char *path);

// The map as JSON in a new string; release it with [`csf_string_free`].
//
// # Safety
// `map` must be a live handle; `out` must be writable.
enum CsfStatus csf_feature_map_to_json(const struct CsfFeatureMap *map, char **out);

// Estimator the map was built with.
//
// # Safety
// `map` must be a live handle; `out` must be writable.
enum CsfStatus csf_feature_map_method(const struct CsfFeatureMap *map, enum CsfMethod *out);

// Number of lines, or 0 for a null handle.
//
// # Safety
// `map` must be null or a live handle.
size_t csf_feature_map_line_count(const struct CsfFeatureMap *map);

// Number of corners, or 0 for a null handle.
//
// # Safety
// `map` must be null or a live handle.
size_t csf_feature_map_corner_count(const struct CsfFeatureMap *map);

// Copies line `i` (in map order, not by id).
//
// # Safety
// `map` must be a live handle; `out` must be writable.
enum CsfStatus csf_feature_map_line(const struct CsfFeatureMap *map, size_t i, struct CsfLine *out);

// Copies corner `i`.
//
// # Safety
// `map` must be a live handle; `out` must be writable.
enum CsfStatus csf_feature_map_corner(const struct CsfFeatureMap *map,
                                      size_t i,
                                      struct CsfCorner *out);

// Releases a feature map. Null is ignored.
//
// # Safety
// `map` must be null or a handle from this library that was not yet freed.
void csf_feature_map_free(struct CsfFeatureMap *map);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CSF_H */
