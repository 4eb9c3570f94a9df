#ifndef NCCZ_H
#define NCCZ_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stddef.h>
#include <stdint.h>

typedef enum NcczStatus {
  NCCZ_STATUS_OK = 0,
  NCCZ_STATUS_NULL_POINTER = 1,
  NCCZ_STATUS_INVALID_ARGUMENT = 2,
  NCCZ_STATUS_DIMENSION_MISMATCH = 3,
  NCCZ_STATUS_NUMERICAL = 4,
  NCCZ_STATUS_IO = 5,
  NCCZ_STATUS_PANIC = 6,
} NcczStatus;

/**
 * Opaque matrix-valued field.
 */
typedef struct NcczField NcczField;

/**
 * Opaque kernel.
 */
typedef struct NcczKernel NcczKernel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the message of the last failed call on this thread into `buf` (NUL-terminated,
 * truncated to `len`). Returns the full message length without the NUL.
 */
size_t nccz_last_error(char *buf, size_t len);

/**
 * Static version string.
 */
const char *nccz_version(void);

/**
 * Field from cell-major, row-major real and imaginary parts (`im` may be null), each of
 * length cells·n·n with cells = 2^{d(k_max − k_min)}.
 */
enum NcczStatus nccz_field_new(size_t d,
                               int k_min,
                               int k_max,
                               size_t n,
                               const double *re,
                               const double *im,
                               size_t len,
                               struct NcczField **out);

enum NcczStatus nccz_field_load(const char *path, struct NcczField **out);

enum NcczStatus nccz_field_save(const struct NcczField *field, const char *path);

/**
 * Releases a field; null is a no-op.
 */
void nccz_field_free(struct NcczField *field);

/**
 * Number of cells and matrix dimension.
 */
enum NcczStatus nccz_field_shape(const struct NcczField *field, size_t *cells, size_t *n);

/**
 * Copies values in the layout of `nccz_field_new`; `im` may be null.
 */
enum NcczStatus nccz_field_values(const struct NcczField *field,
                                  double *re,
                                  double *im,
                                  size_t len);

/**
 * ‖f‖_p; pass p = INFINITY for the max operator norm.
 */
enum NcczStatus nccz_field_norm(const struct NcczField *field, double p, double *out);

/**
 * Kernel by name ("hilbert", "riesz-1", "rough:cos", ...) in dimension d.
 */
enum NcczStatus nccz_kernel_from_name(const char *name, size_t d, struct NcczKernel **out);

void nccz_kernel_free(struct NcczKernel *kernel);

/**
 * T_ε f as a new field.
 */
enum NcczStatus nccz_truncated_apply(const struct NcczKernel *kernel,
                                     const struct NcczField *field,
                                     double eps,
                                     struct NcczField **out);

/**
 * Runs the CZ decomposition at level λ (s = 0 picks the default) and reports whether every
 * property check holds.
 */
enum NcczStatus nccz_cz_validate(const struct NcczField *field,
                                 double lambda,
                                 size_t s,
                                 int *all_ok);

/**
 * Strong maximal norm of `count` Hermitian fields; p is 1, 2 or INFINITY.
 */
enum NcczStatus nccz_strong_max_norm(const struct NcczField *const *fields,
                                     size_t count,
                                     double p,
                                     double *out);

/**
 * Weak-(1,1) certificate at λ on the default ladder, as a JSON string owned by the caller
 * (release with `nccz_string_free`).
 */
enum NcczStatus nccz_weak11_json(const struct NcczKernel *kernel,
                                 const struct NcczField *field,
                                 double lambda,
                                 char **out);

void nccz_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NCCZ_H */
