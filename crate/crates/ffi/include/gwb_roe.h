#ifndef GWB_ROE_H
#define GWB_ROE_H

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum {
  GWB_STATUS_OK = 0,
  GWB_STATUS_NULL_POINTER = 1,
  GWB_STATUS_INVALID_ARGUMENT = 2,
  GWB_STATUS_HYPOTHESIS = 3,
  GWB_STATUS_NOT_LOCALIZED = 4,
  GWB_STATUS_NUMERICAL = 5,
  GWB_STATUS_CERTIFICATION = 6,
  GWB_STATUS_IO = 7,
  GWB_STATUS_CONFIG = 8,
  GWB_STATUS_PANIC = 9,
} GwbStatus;

/**
 * Wannier family with its localization records.
 */
typedef struct GwbFamily GwbFamily;

/**
 * Box grid `[−L, L]^d`.
 */
typedef struct GwbGrid GwbGrid;

/**
 * Intertwiner `V = Σ_γ |φ_γ⟩⟨ψ_γ|`.
 */
typedef struct GwbIntertwiner GwbIntertwiner;

/**
 * Slope of a decay fit and its verdict.
 */
typedef struct {
  double slope;
  double target;
  bool pass;
} GwbDecayFit;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. Valid until the
 * next call into the library on the same thread.
 */
const char *gwb_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *gwb_version(void);

/**
 * Dirichlet grid with `floor(2L/h)` points per axis.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage.
 */
GwbStatus gwb_grid_new(size_t dim, double half_width, double spacing, GwbGrid **out);

/**
 * # Safety
 * `grid` must be null or a handle from [`gwb_grid_new`] not yet freed.
 */
void gwb_grid_free(GwbGrid *grid);

/**
 * Total number of grid points, 0 for a null handle.
 *
 * # Safety
 * `grid` must be null or a live handle.
 */
size_t gwb_grid_len(const GwbGrid *grid);

/**
 * `Σ_{γ ∈ ℤ^d, |γ_k| ≤ extent, ‖x−γ‖ ≥ R} ⟨x−γ⟩^{-2s}`.
 *
 * # Safety
 * `x` must point to `dim` doubles and `out` must be writable.
 */
GwbStatus gwb_lattice_tail_sum(size_t dim,
                               int64_t extent,
                               const double *x,
                               double cutoff,
                               double s,
                               double *out);

/**
 * Closed-form constant `C` of the tail bound `C (1+R)^{d−2s}` with the
 * default `ε`.
 *
 * # Safety
 * `out` must be writable.
 */
GwbStatus gwb_lemma_constant(size_t dim, double s, double radius, double cutoff, double *out);

/**
 * Löwdin-orthonormalized power-law family on the lattice `[lo, hi]^d`.
 *
 * # Safety
 * `grid` must be a live handle and `out` writable.
 */
GwbStatus gwb_family_power_law(const GwbGrid *grid,
                               int64_t lo,
                               int64_t hi,
                               double exponent,
                               GwbFamily **out);

/**
 * Normalized ball indicators on the lattice `[lo, hi]^d`.
 *
 * # Safety
 * `grid` must be a live handle and `out` writable.
 */
GwbStatus gwb_family_extremely_localized(const GwbGrid *grid,
                                         int64_t lo,
                                         int64_t hi,
                                         GwbFamily **out);

/**
 * Wannier family of the lowest Kronig-Penney island below `energy_cap`
 * (pass a non-positive cap for the default), extracted by projected
 * position operators.
 *
 * # Safety
 * `grid` must be a live handle and `out` writable.
 */
GwbStatus gwb_family_kronig_penney(const GwbGrid *grid,
                                   double v0,
                                   double a,
                                   double gap_tol,
                                   double energy_cap,
                                   size_t eigenpairs,
                                   uint64_t seed,
                                   GwbFamily **out);

/**
 * # Safety
 * `family` must be null or a live handle.
 */
void gwb_family_free(GwbFamily *family);

/**
 * Number of members, 0 for a null handle.
 *
 * # Safety
 * `family` must be null or a live handle.
 */
size_t gwb_family_len(const GwbFamily *family);

/**
 * Copies the centers, row-major `len × dim`, into `buf` of `capacity`
 * doubles and stores the number of doubles needed in `needed`.
 *
 * # Safety
 * `family` must be live, `buf` must hold `capacity` doubles (may be null
 * when `capacity` is 0) and `needed` must be writable.
 */
GwbStatus gwb_family_centers(const GwbFamily *family, double *buf, size_t capacity, size_t *needed);

/**
 * `M(s) = max_γ ∫ ⟨x−γ⟩^{2s} |ψ_γ|²`, recorded on the family.
 *
 * # Safety
 * `family` must be live and `out` writable.
 */
GwbStatus gwb_family_certify_s(GwbFamily *family, double s, double *out);

/**
 * `M = max_γ ∫ e^{2α‖x−γ‖} |ψ_γ|²`, recorded on the family.
 *
 * # Safety
 * `family` must be live and `out` writable.
 */
GwbStatus gwb_family_certify_exponential(GwbFamily *family, double alpha, double *out);

/**
 * Intertwiner from `psi` to `phi`, paired by center. Pass null `phi` to
 * pair with the extremely localized family on the same centers.
 *
 * # Safety
 * `psi` must be live, `phi` null or live, `out` writable.
 */
GwbStatus gwb_intertwiner_new(const GwbFamily *psi, const GwbFamily *phi, GwbIntertwiner **out);

/**
 * # Safety
 * `v` must be null or a live handle.
 */
void gwb_intertwiner_free(GwbIntertwiner *v);

/**
 * `‖V*V − P_H‖` and `‖VV* − P_H̃‖`.
 *
 * # Safety
 * `v` must be live and both outputs writable.
 */
GwbStatus gwb_intertwiner_mvn(const GwbIntertwiner *v, double *source, double *target);

/**
 * `‖V − V^R‖` through the Gram route.
 *
 * # Safety
 * `v` must be live and `out` writable.
 */
GwbStatus gwb_norm_of_difference(const GwbIntertwiner *v, double cutoff, double *out);

/**
 * Fits `log ‖V − V^R‖` against `log(1+R)` and compares with `(d−2s)/2`.
 *
 * # Safety
 * `v` must be live, `cutoffs` must hold `count` doubles, `out` writable.
 */
GwbStatus gwb_decay_fit(const GwbIntertwiner *v,
                        const double *cutoffs,
                        size_t count,
                        double s,
                        GwbDecayFit *out);

/**
 * Runs a batch experiment from a TOML config file and writes its reports
 * to `out_dir` (null keeps the configured directory). `pass` receives the
 * overall verdict.
 *
 * # Safety
 * `config_path` must be a NUL-terminated string, `out_dir` null or
 * NUL-terminated, `pass` writable.
 */
GwbStatus gwb_run_experiment(const char *config_path, const char *out_dir, bool *pass);

/**
 * Writes the default TOML config of an experiment kind (`lemma-sweep`,
 * `decay`, `model-pipeline` or `probes`) into `buf` and stores the byte
 * length including the terminator in `needed`.
 *
 * # Safety
 * `kind` must be NUL-terminated, `buf` must hold `capacity` bytes (may be
 * null when `capacity` is 0) and `needed` writable.
 */
GwbStatus gwb_default_config(const char *kind, char *buf, size_t capacity, size_t *needed);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GWB_ROE_H */
