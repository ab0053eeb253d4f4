/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#ifndef GAUSSFPT_H
#define GAUSSFPT_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result codes shared by all entry points.
typedef enum GfStatus {
  GF_STATUS_OK = 0,
  GF_STATUS_NULL_POINTER = 1,
  GF_STATUS_INVALID_ARGUMENT = 2,
  GF_STATUS_NUMERICAL = 3,
  GF_STATUS_ALL_CENSORED = 4,
  GF_STATUS_CONFIG = 5,
  GF_STATUS_IO = 6,
  GF_STATUS_BUFFER_TOO_SMALL = 7,
  GF_STATUS_PANIC = 8,
} GfStatus;

// A tabulated density: knots and values of equal length.
typedef struct GfDensity GfDensity;

// First-passage times of a simulated ensemble; censored paths included.
typedef struct GfSamples GfSamples;

// Simulation settings. `threads == 0` uses every available core.
typedef struct GfSimulation {
  size_t paths;
  double dt;
  double horizon;
  uint64_t seed;
  size_t threads;
} GfSimulation;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *gf_version(void);

// Copies the calling thread's last error message into `buf` (NUL-terminated,
// truncated to `len`). Returns the full message length in bytes.
//
// # Safety
// `buf` must be null or point to `len` writable bytes.
size_t gf_last_error_message(char *buf, size_t len);

// Evaluates the soglia boundary `S(t)`.
//
// # Safety
// `out` must be null or valid for writes.
enum GfStatus gf_soglia(double beta, double d, double t, double *out);

// Closed-form FPT density through the soglia boundary at time `t > 0`.
//
// # Safety
// `out` must be null or valid for writes.
enum GfStatus gf_closed_form(double beta, double d, double t, double *out);

// Closed-form density on `0, step, ..., horizon`.
//
// # Safety
// `out` must be null or valid for writes.
enum GfStatus gf_closed_form_grid(double beta,
                                  double d,
                                  double step,
                                  double horizon,
                                  struct GfDensity **out);

// Solves the Volterra equation for the stationary OU process with
// correlation `exp(-beta|t|)` started at 0, through the soglia boundary
// with parameters `(boundary_beta, d)`.
//
// # Safety
// `out` must be null or valid for writes.
enum GfStatus gf_volterra_ou_soglia(double beta,
                                    double boundary_beta,
                                    double d,
                                    double step,
                                    double horizon,
                                    struct GfDensity **out);

// Simulates first-passage times of the stationary process with correlation
// `exp(-beta|t|) cos(alpha t)`, started at `x0`, through the soglia boundary
// `(boundary_beta, d)`.
//
// # Safety
// `sim` must be null or point to a valid `GfSimulation`; `out` must be null
// or valid for writes.
enum GfStatus gf_simulate_exp_cos(double beta,
                                  double alpha,
                                  double x0,
                                  double boundary_beta,
                                  double d,
                                  const struct GfSimulation *sim,
                                  struct GfSamples **out);

// Histogram density of a sample set. `bin_width <= 0` selects the automatic width.
//
// # Safety
// `samples` must be null or a live handle; `out` must be null or valid for writes.
enum GfStatus gf_samples_histogram(const struct GfSamples *samples,
                                   double bin_width,
                                   struct GfDensity **out);

// Number of paths in total and number that crossed.
//
// # Safety
// `samples` must be null or a live handle; the outputs must be null or valid for writes.
enum GfStatus gf_samples_count(const struct GfSamples *samples, size_t *total, size_t *crossed);

// Copies crossing times in path order into `times`; censored paths are NaN.
//
// # Safety
// `samples` must be null or a live handle; `times` must point to `capacity` writable doubles.
enum GfStatus gf_samples_copy(const struct GfSamples *samples, double *times, size_t capacity);

// Releases a sample set. Null is ignored.
//
// # Safety
// `samples` must be null or a handle not yet freed.
void gf_samples_free(struct GfSamples *samples);

// Number of knots of a density.
//
// # Safety
// `density` must be null or a live handle; `len` must be null or valid for writes.
enum GfStatus gf_density_len(const struct GfDensity *density, size_t *len);

// Copies knots and values; either pointer may be null to skip it.
//
// # Safety
// `density` must be null or a live handle; non-null buffers must hold `capacity` doubles.
enum GfStatus gf_density_copy(const struct GfDensity *density,
                              double *knots,
                              double *values,
                              size_t capacity);

// Total mass of a density: trapezoids for tabulated grids, bin sums for histograms.
//
// # Safety
// `density` must be null or a live handle; `mass` must be null or valid for writes.
enum GfStatus gf_density_mass(const struct GfDensity *density, double *mass);

// Releases a density. Null is ignored.
//
// # Safety
// `density` must be null or a handle not yet freed.
void gf_density_free(struct GfDensity *density);

// Runs an experiment from a JSON configuration, writing its tables to
// `out_dir` (or to the directory named in the configuration when null).
//
// # Safety
// `config_json` must be a NUL-terminated string; `out_dir` null or NUL-terminated.
enum GfStatus gf_run_config_json(const char *config_json, const char *out_dir);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GAUSSFPT_H */
