//! C ABI for the hdg2d solver.
//!
//! The interface is handle-based: `hdg2d_solve_config` runs a full solve
//! from a JSON configuration string (same schema as the CLI) and returns
//! an opaque solver handle through which results are queried. All
//! functions return a status code; `hdg2d_last_error` retrieves a
//! thread-local message for the most recent failure.
//!
//! The generated header is written to `include/hdg2d.h` at build time.

use hdg2d::basis::RefElement;
use hdg2d::cli::Config;
use hdg2d::recovery::{conductor_charge, locate_point, Solution};
use hdg2d::scenarios::Scenario;
use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};

/// Success.
pub const HDG2D_OK: c_int = 0;
/// A null pointer or out-of-range argument was passed.
pub const HDG2D_ERR_INVALID_ARGUMENT: c_int = 1;
/// The configuration failed to parse or validate.
pub const HDG2D_ERR_CONFIG: c_int = 2;
/// The solver failed (singular local system or indefinite global matrix).
pub const HDG2D_ERR_SOLVER: c_int = 3;

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let msg = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn error_code(e: &hdg2d::Error) -> c_int {
    set_error(&e.to_string());
    match e.exit_code() {
        3 => HDG2D_ERR_SOLVER,
        _ => HDG2D_ERR_CONFIG,
    }
}

fn invalid(msg: &str) -> c_int {
    set_error(msg);
    HDG2D_ERR_INVALID_ARGUMENT
}

/// Opaque handle to a solved problem.
pub struct Hdg2dSolver {
    scenario: Scenario,
    re: RefElement,
    sol: Solution,
    charges: Vec<f64>,
    trace_dofs: usize,
}

/// Solve the problem described by the JSON configuration `config_json`
/// (NUL-terminated, same schema as the CLI config file) and store a new
/// solver handle in `*out`. Returns `HDG2D_OK` on success; on failure
/// `*out` is untouched and `hdg2d_last_error` describes the problem.
///
/// # Safety
/// `config_json` must point to a valid NUL-terminated string and `out`
/// to a writable pointer slot.
#[no_mangle]
pub unsafe extern "C" fn hdg2d_solve_config(
    config_json: *const c_char,
    out: *mut *mut Hdg2dSolver,
) -> c_int {
    if config_json.is_null() || out.is_null() {
        return invalid("null pointer argument");
    }
    let text = match CStr::from_ptr(config_json).to_str() {
        Ok(t) => t,
        Err(_) => return invalid("configuration is not valid UTF-8"),
    };
    let cfg: Config = match serde_json::from_str(text) {
        Ok(c) => c,
        Err(e) => {
            set_error(&format!("config parse error: {e}"));
            return HDG2D_ERR_CONFIG;
        }
    };
    if let Err(e) = cfg.validate() {
        return error_code(&e);
    }
    let result = (|| -> hdg2d::Result<Hdg2dSolver> {
        let scenario = cfg.build_scenario(0)?;
        let re = hdg2d::basis::build_reference_element(cfg.order)?;
        let (sol, _, sys) = hdg2d::solve_problem(&scenario.mesh, &re, &scenario.data)?;
        let charges = (1..=scenario.mesh.conductor_count)
            .map(|eta| conductor_charge(&scenario.mesh, &re, &sol, &scenario.data, eta))
            .collect::<hdg2d::Result<Vec<f64>>>()?;
        Ok(Hdg2dSolver {
            scenario,
            re,
            sol,
            charges,
            trace_dofs: sys.n_dof,
        })
    })();
    match result {
        Ok(solver) => {
            *out = Box::into_raw(Box::new(solver));
            HDG2D_OK
        }
        Err(e) => error_code(&e),
    }
}

/// Number of floating conductors in the solved problem.
///
/// # Safety
/// `solver` must be a live handle from `hdg2d_solve_config`; `out` must
/// be writable.
#[no_mangle]
pub unsafe extern "C" fn hdg2d_conductor_count(
    solver: *const Hdg2dSolver,
    out: *mut usize,
) -> c_int {
    if solver.is_null() || out.is_null() {
        return invalid("null pointer argument");
    }
    *out = (*solver).scenario.mesh.conductor_count;
    HDG2D_OK
}

/// Number of unknowns in the condensed global system.
///
/// # Safety
/// `solver` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hdg2d_trace_dof_count(
    solver: *const Hdg2dSolver,
    out: *mut usize,
) -> c_int {
    if solver.is_null() || out.is_null() {
        return invalid("null pointer argument");
    }
    *out = (*solver).trace_dofs;
    HDG2D_OK
}

/// Floating potential of conductor `eta` (1-based) in volts.
///
/// # Safety
/// `solver` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hdg2d_conductor_potential(
    solver: *const Hdg2dSolver,
    eta: usize,
    out: *mut f64,
) -> c_int {
    if solver.is_null() || out.is_null() {
        return invalid("null pointer argument");
    }
    let s = &*solver;
    if eta == 0 || eta > s.sol.conductor_potentials.len() {
        return invalid("conductor index out of range");
    }
    *out = s.sol.conductor_potentials[eta - 1];
    HDG2D_OK
}

/// Total charge recovered on conductor `eta` (1-based) in C/m.
///
/// # Safety
/// `solver` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hdg2d_conductor_charge(
    solver: *const Hdg2dSolver,
    eta: usize,
    out: *mut f64,
) -> c_int {
    if solver.is_null() || out.is_null() {
        return invalid("null pointer argument");
    }
    let s = &*solver;
    if eta == 0 || eta > s.charges.len() {
        return invalid("conductor index out of range");
    }
    *out = s.charges[eta - 1];
    HDG2D_OK
}

/// Evaluate the solution at physical point (x, y). On return `*phi`,
/// `*ex`, `*ey` hold the potential and field and `*inside` is 1 when the
/// point lies in the meshed region, 0 otherwise (fields are zero then).
///
/// # Safety
/// `solver` must be a live handle; all output pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn hdg2d_eval(
    solver: *const Hdg2dSolver,
    x: f64,
    y: f64,
    phi: *mut f64,
    ex: *mut f64,
    ey: *mut f64,
    inside: *mut c_int,
) -> c_int {
    if solver.is_null() || phi.is_null() || ex.is_null() || ey.is_null() || inside.is_null() {
        return invalid("null pointer argument");
    }
    let s = &*solver;
    match locate_point(&s.scenario.mesh, x, y) {
        Some((k, rc)) => {
            let vals = match s.re.evaluate_basis(&[rc]) {
                Ok(v) => v,
                Err(e) => return error_code(&e),
            };
            let (mut p, mut vx, mut vy) = (0.0, 0.0, 0.0);
            for i in 0..s.re.n_p {
                p += vals[(0, i)] * s.sol.phi[k][i];
                vx += vals[(0, i)] * s.sol.ex[k][i];
                vy += vals[(0, i)] * s.sol.ey[k][i];
            }
            *phi = p;
            *ex = vx;
            *ey = vy;
            *inside = 1;
        }
        None => {
            *phi = 0.0;
            *ex = 0.0;
            *ey = 0.0;
            *inside = 0;
        }
    }
    HDG2D_OK
}

/// Release a solver handle. Passing NULL is a no-op.
///
/// # Safety
/// `solver` must be NULL or a handle from `hdg2d_solve_config` not yet
/// freed.
#[no_mangle]
pub unsafe extern "C" fn hdg2d_free(solver: *mut Hdg2dSolver) {
    if !solver.is_null() {
        drop(Box::from_raw(solver));
    }
}

/// Message for the most recent error on this thread. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn hdg2d_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn hdg2d_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}
