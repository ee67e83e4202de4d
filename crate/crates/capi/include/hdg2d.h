/* C interface of the hdg2d electrostatics solver. */

#ifndef HDG2D_H
#define HDG2D_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Success.
#define HDG2D_OK 0

// A null pointer or out-of-range argument was passed.
#define HDG2D_ERR_INVALID_ARGUMENT 1

// The configuration failed to parse or validate.
#define HDG2D_ERR_CONFIG 2

// The solver failed (singular local system or indefinite global matrix).
#define HDG2D_ERR_SOLVER 3

// Opaque handle to a solved problem.
typedef struct Hdg2dSolver Hdg2dSolver;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Solve the problem described by the JSON configuration `config_json`
// (NUL-terminated, same schema as the CLI config file) and store a new
// solver handle in `*out`. Returns `HDG2D_OK` on success; on failure
// `*out` is untouched and `hdg2d_last_error` describes the problem.
//
// # Safety
// `config_json` must point to a valid NUL-terminated string and `out`
// to a writable pointer slot.
int hdg2d_solve_config(const char *config_json, struct Hdg2dSolver **out);

// Number of floating conductors in the solved problem.
//
// # Safety
// `solver` must be a live handle from `hdg2d_solve_config`; `out` must
// be writable.
int hdg2d_conductor_count(const struct Hdg2dSolver *solver, size_t *out);

// Number of unknowns in the condensed global system.
//
// # Safety
// `solver` must be a live handle; `out` must be writable.
int hdg2d_trace_dof_count(const struct Hdg2dSolver *solver, size_t *out);

// Floating potential of conductor `eta` (1-based) in volts.
//
// # Safety
// `solver` must be a live handle; `out` must be writable.
int hdg2d_conductor_potential(const struct Hdg2dSolver *solver, size_t eta, double *out);

// Total charge recovered on conductor `eta` (1-based) in C/m.
//
// # Safety
// `solver` must be a live handle; `out` must be writable.
int hdg2d_conductor_charge(const struct Hdg2dSolver *solver, size_t eta, double *out);

// Evaluate the solution at physical point (x, y). On return `*phi`,
// `*ex`, `*ey` hold the potential and field and `*inside` is 1 when the
// point lies in the meshed region, 0 otherwise (fields are zero then).
//
// # Safety
// `solver` must be a live handle; all output pointers must be writable.
int hdg2d_eval(const struct Hdg2dSolver *solver,
               double x,
               double y,
               double *phi,
               double *ex,
               double *ey,
               int *inside);

// Release a solver handle. Passing NULL is a no-op.
//
// # Safety
// `solver` must be NULL or a handle from `hdg2d_solve_config` not yet
// freed.
void hdg2d_free(struct Hdg2dSolver *solver);

// Message for the most recent error on this thread. The pointer stays
// valid until the next failing call on the same thread.
const char *hdg2d_last_error(void);

// Library version as a static NUL-terminated string.
const char *hdg2d_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HDG2D_H */
