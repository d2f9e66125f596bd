#ifndef PARADIFF_H
#define PARADIFF_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum PdStatus {
  PdStatus_Ok = 0,
  PdStatus_NullPointer = 1,
  PdStatus_InvalidArgument = 2,
  PdStatus_NotConverged = 3,
  PdStatus_Numerical = 4,
  PdStatus_Panic = 5,
} PdStatus;

typedef struct PdField PdField;

typedef struct PdGrid PdGrid;

typedef struct PdReport PdReport;

/**
 * Plain-data view of a finished solve.
 */
typedef struct PdReportSummary {
  bool converged;
  uintptr_t iterations;
  uintptr_t halvings;
  double horizon;
  double max_contraction_ratio;
  double max_hamiltonian_drift;
  double final_sobolev_norm;
} PdReportSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null. The pointer stays
 * valid until the next call into this library from the same thread.
 */
const char *pd_last_error_message(void);

/**
 * Frequency box `|j|_inf <= cutoff` in `dim` dimensions on the standard grid.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum PdStatus pd_grid_new(uintptr_t dim, uintptr_t cutoff, struct PdGrid **out);

/**
 * # Safety
 * `grid` must come from [`pd_grid_new`] and not be freed twice.
 */
void pd_grid_free(struct PdGrid *grid);

/**
 * `(re + i im) e^{ik·x}`, where `k` points to `dim` integers.
 *
 * # Safety
 * `grid` must be a live handle, `k` valid for `dim` reads and `out` for writes.
 */
enum PdStatus pd_field_mode(const struct PdGrid *grid,
                            const int64_t *k,
                            double re,
                            double im,
                            struct PdField **out);

/**
 * `field += other`; both must live on the same grid.
 *
 * # Safety
 * Both handles must be live.
 */
enum PdStatus pd_field_add(struct PdField *field, const struct PdField *other);

/**
 * # Safety
 * `field` must be live and `out` valid for writes.
 */
enum PdStatus pd_field_sobolev_norm(const struct PdField *field, double s, double *out);

/**
 * # Safety
 * `field` must come from this library and not be freed twice.
 */
void pd_field_free(struct PdField *field);

/**
 * Picard solve of the NLS with the named density (`free`, `quartic`,
 * `flagship`, `coupled`) from `u0` up to `horizon` with step `dt`. Tracks the
 * iteration in `H^s`. A run that stops short of convergence still yields a
 * report together with [`PdStatus::NotConverged`].
 *
 * # Safety
 * `density` must be a NUL-terminated string, `u0` a live field and `out`
 * valid for writes.
 */
enum PdStatus pd_picard_solve(const char *density,
                              double coupling,
                              const struct PdField *u0,
                              double horizon,
                              double dt,
                              double s,
                              struct PdReport **out);

/**
 * # Safety
 * `report` must be live and `out` valid for writes.
 */
enum PdStatus pd_report_summary(const struct PdReport *report,
                                double s,
                                struct PdReportSummary *out);

/**
 * Copies the final `u(x)` Fourier coefficients, in grid order, as interleaved
 * `re, im` pairs. `len` is the capacity of `buf` in doubles; the required
 * length is always written to `needed`.
 *
 * # Safety
 * `report` must be live, `buf` valid for `len` writes (or null with `len = 0`)
 * and `needed` valid for writes.
 */
enum PdStatus pd_report_final_coeffs(const struct PdReport *report,
                                     double *buf,
                                     uintptr_t len,
                                     uintptr_t *needed);

/**
 * # Safety
 * `report` must come from [`pd_picard_solve`] and not be freed twice.
 */
void pd_report_free(struct PdReport *report);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PARADIFF_H */
