//! 2D hybridizable discontinuous Galerkin (HDG) solver for electrostatic
//! boundary-value problems with floating-potential conductors (FPCs).
//!
//! The solver discretizes the Poisson equation in mixed form on triangular
//! meshes. Element interiors couple only through a single-valued potential
//! trace on the interior mesh skeleton; each isolated conductor contributes
//! one extra scalar unknown (its floating potential), constrained by a
//! prescribed total charge. Element unknowns are condensed away, leaving a
//! sparse symmetric positive definite system over the skeleton traces and
//! the conductor scalars.
//!
//! Modules follow the pipeline:
//!
//! * [`mesh`] — triangle meshes, boundary tags, skeleton extraction, built-in
//!   generators and an ASCII exchange format
//! * [`basis`] — nodal Lagrange reference elements (triangle + edge) with
//!   quadrature and face-node maps
//! * [`problem`] — material data, boundary data, conductor charges
//! * [`local`] — per-element block systems and static condensation
//! * [`assembly`] — trace DOF numbering and the global condensed system
//! * [`solver`] — sparse Cholesky / PCG for the SPD trace system
//! * [`recovery`] — local field recovery, charges, diagnostics, sampling
//! * [`scenarios`] — fully specified problem instances with reference
//!   solutions (coaxial capacitor with FPC, manufactured solutions, ...)
//! * [`cli`] — configuration format and batch drivers used by the `hdg2d`
//!   binary

pub mod assembly;
pub mod basis;
pub mod cli;
pub mod error;
pub mod local;
pub mod mesh;
pub mod output;
pub mod problem;
pub mod recovery;
pub mod scenarios;
pub mod solver;
pub mod sparse;

pub use error::{Error, Result};

/// Run the full pipeline on one problem: assemble the condensed trace
/// system, solve it, and recover the element fields. Returns the solution
/// together with the solver report and the assembled system (for
/// diagnostics such as residuals, dimensions and nonzero counts).
pub fn solve_problem(
    mesh: &mesh::Mesh2D,
    re: &basis::RefElement,
    data: &problem::ProblemData,
) -> Result<(
    recovery::Solution,
    solver::SolveReport,
    assembly::GlobalTraceSystem,
)> {
    let (sys, locals, dof_map) = assembly::assemble_system(mesh, re, data)?;
    let (trace, report) = solver::solve_spd(&sys)?;
    let sol = recovery::recover_local_fields(&locals, &trace, &dof_map, re, data.tau0)?;
    Ok((sol, report, sys))
}

/// Vacuum permittivity [F/m].
pub const VACUUM_PERMITTIVITY: f64 = 8.8541878128e-12;

/// Elementary charge [C].
pub const ELEMENTARY_CHARGE: f64 = 1.602176634e-19;
