#ifndef DIVLAB_H
#define DIVLAB_H

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum DivlabStatus {
  DIVLAB_STATUS_OK = 0,
  // Null pointer, bad length, invalid UTF-8 or an invalid parameter.
  DIVLAB_STATUS_INVALID_ARGUMENT = 1,
  DIVLAB_STATUS_UNKNOWN_FIELD = 2,
  DIVLAB_STATUS_OUT_OF_DOMAIN = 3,
  // The computation itself failed (integration, quadrature, preconditions).
  DIVLAB_STATUS_NUMERICAL_FAILURE = 4,
  // The run completed and the report's verdict is FAIL.
  DIVLAB_STATUS_VERIFICATION_FAILED = 5,
  DIVLAB_STATUS_PANIC = 6,
} DivlabStatus;

// Opaque vector field handle.
typedef struct DivlabField DivlabField;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null. Valid until the
// next call into the library on this thread.
const char *divlab_last_error(void);

// Library version as a static string.
const char *divlab_version(void);

// Builds a field from a registry name such as `capillary:R=1`.
//
// # Safety
// `name` must be a NUL-terminated string and `out` a valid pointer.
enum DivlabStatus divlab_field_from_registry(const char *name, struct DivlabField **out);

// Releases a field. Null is ignored.
//
// # Safety
// `field` must come from [`divlab_field_from_registry`] and not be freed twice.
void divlab_field_free(struct DivlabField *field);

// Ambient dimension, or 0 for a null handle.
//
// # Safety
// `field` must be null or a live handle.
size_t divlab_field_dim(const struct DivlabField *field);

// Certified bound on the sup norm of the field.
//
// # Safety
// `field` must be a live handle and `out` a valid pointer.
enum DivlabStatus divlab_field_sup_bound(const struct DivlabField *field, double *out);

// Evaluates the field at `x` (length `len`) into `out` (length `out_len`).
//
// # Safety
// `x` must point to `len` doubles and `out` to `out_len` writable doubles.
enum DivlabStatus divlab_field_eval(const struct DivlabField *field,
                                    const double *x,
                                    size_t len,
                                    double *out,
                                    size_t out_len);

// Central-difference divergence at `x` with step `h`.
//
// # Safety
// `x` must point to `len` doubles and `out` be a valid pointer.
enum DivlabStatus divlab_field_numeric_divergence(const struct DivlabField *field,
                                                  const double *x,
                                                  size_t len,
                                                  double h,
                                                  double *out);

// The two admissible upper bounds on gamma for the counterexample in dimension `n`.
//
// # Safety
// `out_first` and `out_second` must be valid pointers.
enum DivlabStatus divlab_gamma_bounds(size_t n, double *out_first, double *out_second);

// Certifies the counterexample potential in dimension `n` on the default
// grid. `gamma <= 0` selects the largest admissible value. Writes whether the
// certificate holds and the smallest condition margin.
//
// # Safety
// `out_certified` and `out_min_margin` must be valid pointers.
enum DivlabStatus divlab_certify_counterexample(size_t n,
                                                double gamma,
                                                double c,
                                                bool *out_certified,
                                                double *out_min_margin);

// Runs a scenario given as JSON (`name`, `operation`, optional `field`,
// `params`, `tolerances`) and returns the JSON report in `out_report`.
// The report is also returned when the status is `VerificationFailed`.
//
// # Safety
// `scenario_json` must be a NUL-terminated string and `out_report` a valid
// pointer; the returned string must be released with [`divlab_string_free`].
enum DivlabStatus divlab_run_scenario_json(const char *scenario_json,
                                           uint64_t seed,
                                           char **out_report);

// Runs a built-in recipe by name; see [`divlab_run_scenario_json`].
//
// # Safety
// As for [`divlab_run_scenario_json`].
enum DivlabStatus divlab_run_recipe(const char *name, uint64_t seed, char **out_report);

// Releases a string returned by the library. Null is ignored.
//
// # Safety
// `s` must come from this library and not be freed twice.
void divlab_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DIVLAB_H */
