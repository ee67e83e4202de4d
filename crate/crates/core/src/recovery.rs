//! Field recovery from the trace solution, charge and error computation,
//! transmission diagnostics and line sampling.

use crate::assembly::{GlobalTraceSystem, TraceDofMap};
use crate::basis::RefElement;
use crate::error::{Error, Result};
use crate::local::LocalSystem;
use crate::mesh::{BoundaryTag, Mesh2D};
use crate::problem::ProblemData;
use nalgebra::DVector;

/// Recovered solution: the global vector plus per-element nodal fields.
#[derive(Debug, Clone)]
pub struct Solution {
    pub p: usize,
    pub tau0: f64,
    /// Full global vector (trace DOFs then conductor scalars).
    pub trace: Vec<f64>,
    /// Floating potentials, index eta-1.
    pub conductor_potentials: Vec<f64>,
    /// Per-element nodal potential, N_p values each.
    pub phi: Vec<DVector<f64>>,
    /// Per-element nodal field components.
    pub ex: Vec<DVector<f64>>,
    pub ey: Vec<DVector<f64>>,
}

/// Back-substitute the solved trace vector through the stored local
/// factorizations (elements are independent).
pub fn recover_local_fields(
    locals: &[LocalSystem],
    trace: &[f64],
    dof_map: &TraceDofMap,
    re: &RefElement,
    tau0: f64,
) -> Result<Solution> {
    let n_p = re.n_p;
    let mut phi = Vec::with_capacity(locals.len());
    let mut ex = Vec::with_capacity(locals.len());
    let mut ey = Vec::with_capacity(locals.len());
    for l in locals {
        let u = l.recover(trace)?;
        phi.push(u.rows(0, n_p).clone_owned());
        ex.push(u.rows(n_p, n_p).clone_owned());
        ey.push(u.rows(2 * n_p, n_p).clone_owned());
    }
    let conductor_potentials = (1..=dof_map.m)
        .map(|eta| trace[dof_map.conductor_dof(eta)])
        .collect();
    Ok(Solution {
        p: re.p,
        tau0,
        trace: trace.to_vec(),
        conductor_potentials,
        phi,
        ex,
        ey,
    })
}

/// Evaluate the field values of element `k` on local face `lf` at the edge
/// quadrature points; returns per-point (phi, Ex, Ey).
fn face_quad_values(
    re: &RefElement,
    sol: &Solution,
    k: usize,
    lf: usize,
) -> Vec<(f64, f64, f64)> {
    let fm = &re.fmask[lf];
    let neq = re.edge_quad_points.len();
    let mut out = Vec::with_capacity(neq);
    for q in 0..neq {
        let mut v = (0.0, 0.0, 0.0);
        for (i_, &gi) in fm.iter().enumerate() {
            let b = re.edge_phi_quad[(q, i_)];
            v.0 += b * sol.phi[k][gi];
            v.1 += b * sol.ex[k][gi];
            v.2 += b * sol.ey[k][gi];
        }
        out.push(v);
    }
    out
}

/// Total charge on conductor `eta`: surface integral of the normal
/// component of eps E with the normal pointing out of the conductor (into
/// the meshed dielectric).
pub fn conductor_charge(
    mesh: &Mesh2D,
    re: &RefElement,
    sol: &Solution,
    data: &ProblemData,
    eta: usize,
) -> Result<f64> {
    if eta == 0 || eta > mesh.conductor_count {
        return Err(Error::BadProblemData(format!(
            "conductor index {eta} out of range 1..={}",
            mesh.conductor_count
        )));
    }
    let mut q_total = 0.0;
    for face in &mesh.faces {
        if face.tag != BoundaryTag::Floating(eta) {
            continue;
        }
        let &(k, lf) = &face.adjacent[0];
        let n = mesh.outward_normal(k, lf);
        let l = mesh.face_length(k, lf);
        let ek = data.permittivity[k];
        let vals = face_quad_values(re, sol, k, lf);
        for (qp, &(_, exv, eyv)) in vals.iter().enumerate() {
            // conductor-outward normal is minus the element-outward normal
            q_total -= re.edge_quad_weights[qp] * l * ek * (n[0] * exv + n[1] * eyv);
        }
    }
    Ok(q_total)
}

/// Numerical flux of eps E through the Dirichlet/Neumann outer boundary,
/// with the domain-outward normal. Dirichlet faces include the
/// stabilization correction tau (phi - f^D) and Neumann faces integrate
/// the prescribed data; this is the discretely conserved flux, so for
/// rho = 0 it balances the total conductor charge to solver tolerance.
pub fn outer_boundary_flux(
    mesh: &Mesh2D,
    re: &RefElement,
    sol: &Solution,
    data: &ProblemData,
) -> f64 {
    let mut flux = 0.0;
    for face in &mesh.faces {
        let &(k, lf) = &face.adjacent[0];
        let n = mesh.outward_normal(k, lf);
        let l = mesh.face_length(k, lf);
        let ek = data.permittivity[k];
        match face.tag {
            BoundaryTag::Dirichlet(marker) => {
                let tau = ek * data.tau0 / mesh.shortest_edge(k);
                let vals = face_quad_values(re, sol, k, lf);
                for (qp, &(phiv, exv, eyv)) in vals.iter().enumerate() {
                    let t = re.edge_quad_points[qp];
                    let (pu, pw) = mesh.face_endpoints(k, lf);
                    let x = pu[0] + t * (pw[0] - pu[0]);
                    let y = pu[1] + t * (pw[1] - pu[1]);
                    let fd = (data.dirichlet)(marker, x, y);
                    flux += re.edge_quad_weights[qp]
                        * l
                        * (ek * (n[0] * exv + n[1] * eyv) + tau * (phiv - fd));
                }
            }
            BoundaryTag::Neumann(marker) => {
                for (qp, &t) in re.edge_quad_points.iter().enumerate() {
                    let (pu, pw) = mesh.face_endpoints(k, lf);
                    let x = pu[0] + t * (pw[0] - pu[0]);
                    let y = pu[1] + t * (pw[1] - pu[1]);
                    flux += re.edge_quad_weights[qp] * l * (data.neumann)(marker, x, y);
                }
            }
            _ => {}
        }
    }
    flux
}

/// Maximum weak transmission/charge residual: the largest row residual of
/// the solved global system, normalized by the RHS norm (1.0 floor).
pub fn weak_transmission_residual(sys: &GlobalTraceSystem, trace: &[f64]) -> f64 {
    let mut ax = vec![0.0; sys.n_dof];
    sys.matrix.matvec(trace, &mut ax);
    let bnorm = crate::sparse::norm2(&sys.rhs).max(f64::MIN_POSITIVE);
    let mut worst = 0.0f64;
    for i in 0..sys.n_dof {
        worst = worst.max((ax[i] - sys.rhs[i]).abs());
    }
    worst / bnorm
}

/// Maximum pointwise jump of n . (eps E) across interior faces, sampled at
/// the edge quadrature points.
pub fn pointwise_flux_jump(
    mesh: &Mesh2D,
    re: &RefElement,
    sol: &Solution,
    data: &ProblemData,
) -> f64 {
    let mut worst = 0.0f64;
    for face in &mesh.faces {
        if face.adjacent.len() != 2 {
            continue;
        }
        let (k0, l0) = face.adjacent[0];
        let (k1, l1) = face.adjacent[1];
        let n0 = mesh.outward_normal(k0, l0);
        let n1 = mesh.outward_normal(k1, l1);
        let v0 = face_quad_values(re, sol, k0, l0);
        let v1 = face_quad_values(re, sol, k1, l1);
        // quadrature points of the two sides traverse the edge in opposite
        // parameter directions when the local orientations differ; match
        // them by physical position
        let (pu0, _) = mesh.face_endpoints(k0, l0);
        let (pu1, pw1) = mesh.face_endpoints(k1, l1);
        let same_dir = (pu0[0] - pu1[0]).hypot(pu0[1] - pu1[1])
            < (pu0[0] - pw1[0]).hypot(pu0[1] - pw1[1]);
        let neq = v0.len();
        for q in 0..neq {
            let q1 = if same_dir { q } else { neq - 1 - q };
            // symmetric Gauss points map exactly under t -> 1-t
            let f0 = data.permittivity[k0] * (n0[0] * v0[q].1 + n0[1] * v0[q].2);
            let f1 = data.permittivity[k1] * (n1[0] * v1[q1].1 + n1[1] * v1[q1].2);
            worst = worst.max((f0 + f1).abs());
        }
    }
    worst
}

/// Maximum over the faces of conductor `eta` of the nodal deviation
/// |phi_k - conductor potential|.
pub fn equipotential_deviation(
    mesh: &Mesh2D,
    re: &RefElement,
    sol: &Solution,
    eta: usize,
) -> f64 {
    let phic = sol.conductor_potentials[eta - 1];
    let mut worst = 0.0f64;
    for face in &mesh.faces {
        if face.tag != BoundaryTag::Floating(eta) {
            continue;
        }
        let &(k, lf) = &face.adjacent[0];
        for &gi in &re.fmask[lf] {
            worst = worst.max((sol.phi[k][gi] - phic).abs());
        }
    }
    worst
}

/// L2 norm over the mesh of (field - exact) where `select` picks the nodal
/// coefficients to compare.
fn l2_error_of(
    mesh: &Mesh2D,
    re: &RefElement,
    nodal: &[DVector<f64>],
    exact: &dyn Fn(f64, f64) -> f64,
) -> f64 {
    let mut err2 = 0.0;
    for k in 0..mesh.n_elements() {
        let [va, vb, vc] = mesh.element_coords(k);
        let det_j = 2.0 * mesh.element_area(k);
        for (q, &[xr, yr]) in re.quad_points.iter().enumerate() {
            let x = va[0] + (vb[0] - va[0]) * xr + (vc[0] - va[0]) * yr;
            let y = va[1] + (vb[1] - va[1]) * xr + (vc[1] - va[1]) * yr;
            let mut vh = 0.0;
            for i in 0..re.n_p {
                vh += re.phi_quad[(q, i)] * nodal[k][i];
            }
            let d = vh - exact(x, y);
            err2 += re.quad_weights[q] * det_j * d * d;
        }
    }
    err2.sqrt()
}

/// L2 error of the potential against an analytic solution.
pub fn l2_error_phi(
    mesh: &Mesh2D,
    re: &RefElement,
    sol: &Solution,
    exact: &dyn Fn(f64, f64) -> f64,
) -> f64 {
    l2_error_of(mesh, re, &sol.phi, exact)
}

/// Combined L2 error of both field components.
pub fn l2_error_field(
    mesh: &Mesh2D,
    re: &RefElement,
    sol: &Solution,
    exact_ex: &dyn Fn(f64, f64) -> f64,
    exact_ey: &dyn Fn(f64, f64) -> f64,
) -> f64 {
    let ex = l2_error_of(mesh, re, &sol.ex, exact_ex);
    let ey = l2_error_of(mesh, re, &sol.ey, exact_ey);
    ex.hypot(ey)
}

/// Locate the element containing physical point (x, y); returns the
/// element index and its reference coordinates. Points on shared edges
/// resolve to the lowest adjacent element index.
pub fn locate_point(mesh: &Mesh2D, x: f64, y: f64) -> Option<(usize, [f64; 2])> {
    for k in 0..mesh.n_elements() {
        let [va, vb, vc] = mesh.element_coords(k);
        let xmin = va[0].min(vb[0]).min(vc[0]);
        let xmax = va[0].max(vb[0]).max(vc[0]);
        let ymin = va[1].min(vb[1]).min(vc[1]);
        let ymax = va[1].max(vb[1]).max(vc[1]);
        let pad = 1e-12 * (xmax - xmin + ymax - ymin).max(1e-300);
        if x < xmin - pad || x > xmax + pad || y < ymin - pad || y > ymax + pad {
            continue;
        }
        let det = 2.0 * mesh.element_area(k);
        let xr = ((vc[1] - va[1]) * (x - va[0]) - (vc[0] - va[0]) * (y - va[1])) / det;
        let yr = (-(vb[1] - va[1]) * (x - va[0]) + (vb[0] - va[0]) * (y - va[1])) / det;
        let tol = 1e-12;
        if xr >= -tol && yr >= -tol && xr + yr <= 1.0 + tol {
            return Some((k, [xr.max(0.0), yr.max(0.0)]));
        }
    }
    None
}

/// One sampled point along a line segment.
#[derive(Debug, Clone, Copy)]
pub struct LineSample {
    /// Arc length from the segment start.
    pub s: f64,
    pub x: f64,
    pub y: f64,
    pub phi: f64,
    pub ex: f64,
    pub ey: f64,
    /// False when the point lies outside the meshed region (conductor
    /// hole or beyond the domain); field values are zero there.
    pub inside: bool,
}

/// Sample phi and E at `n_samples` evenly spaced points from `a` to `b`
/// (endpoints included).
pub fn evaluate_line(
    mesh: &Mesh2D,
    re: &RefElement,
    sol: &Solution,
    a: [f64; 2],
    b: [f64; 2],
    n_samples: usize,
) -> Result<Vec<LineSample>> {
    if n_samples < 2 {
        return Err(Error::BadProblemData(
            "line sampling needs at least 2 points".into(),
        ));
    }
    let len = (b[0] - a[0]).hypot(b[1] - a[1]);
    let mut out = Vec::with_capacity(n_samples);
    for i in 0..n_samples {
        let t = i as f64 / (n_samples - 1) as f64;
        let x = a[0] + t * (b[0] - a[0]);
        let y = a[1] + t * (b[1] - a[1]);
        let sample = match locate_point(mesh, x, y) {
            Some((k, rc)) => {
                let vals = re.evaluate_basis(&[rc])?;
                let mut phi = 0.0;
                let mut ex = 0.0;
                let mut ey = 0.0;
                for i_ in 0..re.n_p {
                    phi += vals[(0, i_)] * sol.phi[k][i_];
                    ex += vals[(0, i_)] * sol.ex[k][i_];
                    ey += vals[(0, i_)] * sol.ey[k][i_];
                }
                LineSample {
                    s: t * len,
                    x,
                    y,
                    phi,
                    ex,
                    ey,
                    inside: true,
                }
            }
            None => LineSample {
                s: t * len,
                x,
                y,
                phi: 0.0,
                ex: 0.0,
                ey: 0.0,
                inside: false,
            },
        };
        out.push(sample);
    }
    Ok(out)
}
