#ifndef TOPOROUTER_H
#define TOPOROUTER_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Outcome of every call.
 */
typedef enum TrStatus {
  TR_STATUS_OK = 0,
  TR_STATUS_NULL_POINTER = 1,
  TR_STATUS_INVALID_ARGUMENT = 2,
  TR_STATUS_NUMERIC = 3,
  TR_STATUS_BUFFER_TOO_SMALL = 4,
  TR_STATUS_PANIC = 5,
} TrStatus;

/**
 * Which disorder terms a realization perturbs.
 */
typedef enum TrDisorderKind {
  TR_DISORDER_KIND_NONE = 0,
  TR_DISORDER_KIND_ON_SITE = 1,
  TR_DISORDER_KIND_NEAREST_NEIGHBOR = 2,
  TR_DISORDER_KIND_LONG_RANGE = 3,
} TrDisorderKind;

/**
 * Result of one adiabatic ramp (opaque).
 */
typedef struct TrEvolution TrEvolution;

/**
 * Lattice geometry (opaque).
 */
typedef struct TrLattice TrLattice;

/**
 * Disorder request: `w` is the strength, `seed` keys the draw.
 */
typedef struct TrDisorder {
  enum TrDisorderKind kind;
  double w;
  uint64_t seed;
} TrDisorder;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *tr_version(void);

/**
 * Copies the calling thread's last error message into `buf` (NUL-terminated,
 * truncated to `capacity`). Returns the full message length including the
 * terminator, or 0 when no error has been recorded.
 *
 * # Safety
 * `buf` must be NULL or valid for `capacity` bytes.
 */
size_t tr_last_error_message(char *buf, size_t capacity);

/**
 * Creates a lattice of `n_cells` cells (even, at least 2) with coupling `j`.
 * `extra_hop_m = 0` selects the two-port lattice; `3..=n_cells + 1` adds the
 * extra hop `b_1 <-> a_m`.
 *
 * # Safety
 * `out` must be NULL or valid for one pointer write.
 */
enum TrStatus tr_lattice_new(size_t n_cells, double j, size_t extra_hop_m, struct TrLattice **out);

/**
 * Releases a lattice handle.
 *
 * # Safety
 * `lattice` must be NULL or a handle from `tr_lattice_new` not yet freed.
 */
void tr_lattice_free(struct TrLattice *lattice);

/**
 * Writes the number of sites `2 * n_cells + 1`.
 *
 * # Safety
 * Pointers must be NULL or valid.
 */
enum TrStatus tr_lattice_num_sites(const struct TrLattice *lattice, size_t *out);

/**
 * Writes the real Hamiltonian at `theta` row-major into `out`
 * (`capacity >= L * L`). `disorder` may be NULL.
 *
 * # Safety
 * Pointers must be NULL or valid; `out` must hold `capacity` doubles.
 */
enum TrStatus tr_hamiltonian(const struct TrLattice *lattice,
                             double theta,
                             const struct TrDisorder *disorder,
                             double *out,
                             size_t capacity);

/**
 * Writes the `L` eigenvalues at `theta` in ascending order.
 *
 * # Safety
 * Pointers must be NULL or valid; `out` must hold `capacity` doubles.
 */
enum TrStatus tr_eigenvalues(const struct TrLattice *lattice,
                             double theta,
                             const struct TrDisorder *disorder,
                             double *out,
                             size_t capacity);

/**
 * Writes the zero mode at `theta` (clean lattice) as real and imaginary
 * parts, plus its energy.
 *
 * # Safety
 * Pointers must be NULL or valid; `re`/`im` must hold `capacity` doubles.
 */
enum TrStatus tr_zero_mode(const struct TrLattice *lattice,
                           double theta,
                           double *re,
                           double *im,
                           size_t capacity,
                           double *energy);

/**
 * Minimal zero-mode gap over `[0, 2 pi]`: a uniform grid of `grid_points`,
 * refined by golden section to `refine_to` (`<= 0` disables refinement).
 *
 * # Safety
 * Pointers must be NULL or valid.
 */
enum TrStatus tr_minimal_gap(const struct TrLattice *lattice,
                             size_t grid_points,
                             double refine_to,
                             double *gap,
                             double *theta_at_min);

/**
 * Runs the ramp `theta: 0 -> pi` at speed `omega` with RK4 step `dt`.
 * Fails with `TR_STATUS_NUMERIC` if the norm drifts beyond tolerance.
 *
 * # Safety
 * Pointers must be NULL or valid; `disorder` may be NULL.
 */
enum TrStatus tr_evolve(const struct TrLattice *lattice,
                        double omega,
                        double dt,
                        const struct TrDisorder *disorder,
                        struct TrEvolution **out);

/**
 * Releases an evolution handle.
 *
 * # Safety
 * `evolution` must be NULL or a handle from `tr_evolve` not yet freed.
 */
void tr_evolution_free(struct TrEvolution *evolution);

/**
 * Fidelity of the final state with the ideal routed state.
 *
 * # Safety
 * Pointers must be NULL or valid.
 */
enum TrStatus tr_evolution_fidelity(const struct TrEvolution *evolution, double *out);

/**
 * Largest deviation of the state norm from 1 during the run.
 *
 * # Safety
 * Pointers must be NULL or valid.
 */
enum TrStatus tr_evolution_norm_drift(const struct TrEvolution *evolution, double *out);

/**
 * Number of integrator steps taken.
 *
 * # Safety
 * Pointers must be NULL or valid.
 */
enum TrStatus tr_evolution_steps(const struct TrEvolution *evolution, size_t *out);

/**
 * Final amplitudes as real and imaginary parts.
 *
 * # Safety
 * Pointers must be NULL or valid; `re`/`im` must hold `capacity` doubles.
 */
enum TrStatus tr_evolution_final_state(const struct TrEvolution *evolution,
                                       double *re,
                                       double *im,
                                       size_t capacity);

/**
 * Final phases relative to `a_1`, in `(-pi, pi]`; NaN on sites whose
 * amplitude is too small to carry a phase.
 *
 * # Safety
 * Pointers must be NULL or valid; `out` must hold `capacity` doubles.
 */
enum TrStatus tr_evolution_phase_profile(const struct TrEvolution *evolution,
                                         double *out,
                                         size_t capacity);

/**
 * Steady-state populations `|<rho_n>|^2` for a coherent drive of strength
 * `amplitude` on site ordinal `drive_site`, detuning `detuning` and uniform
 * decay `kappa > 0`.
 *
 * # Safety
 * Pointers must be NULL or valid; `out` must hold `capacity` doubles.
 */
enum TrStatus tr_steady_state(const struct TrLattice *lattice,
                              double theta,
                              size_t drive_site,
                              double amplitude,
                              double detuning,
                              double kappa,
                              double *out,
                              size_t capacity);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TOPOROUTER_H */
