//! Per-element block systems and static condensation.
//!
//! Local unknowns are ordered [phi (N_p); Ex (N_p); Ey (N_p)]. The blocks
//! are assembled in a scaled form that makes the local matrix symmetric and
//! the trace coupling satisfy A-tilde = A-bar transposed exactly, which in
//! turn makes the condensed global system symmetric positive definite:
//!
//! * potential-test rows carry the stabilization terms tau(phi - trace) on
//!   interior and Dirichlet faces only; floating and Neumann faces get none
//! * field-test rows are scaled by -eps_k
//! * the per-element stabilization is tau0 * eps_k / h_k; the eps_k factor
//!   keeps the two contributions to the trace system at the same scale even
//!   for eps near 1e-12, avoiding catastrophic cancellation
//!
//! A floating face couples the element fields to the conductor's single
//! scalar through the face integrals of n . (eps E); there is no
//! stabilization term against the conductor potential.

use crate::assembly::TraceDofMap;
use crate::basis::RefElement;
use crate::error::{Error, Result};
use crate::mesh::{BoundaryTag, Mesh2D};
use crate::problem::ProblemData;
use nalgebra::{DMatrix, DVector};

/// Stabilization parameter of element `k`: tau0 / h_k with h_k the
/// shortest edge.
pub fn stabilization_tau(mesh: &Mesh2D, k: usize, tau0: f64) -> Result<f64> {
    if !(tau0 > 0.0) {
        return Err(Error::NonPositiveTau(tau0));
    }
    Ok(tau0 / mesh.shortest_edge(k))
}

/// Assembled block system of one element.
pub struct LocalSystem {
    pub k: usize,
    /// Local matrix over [phi; Ex; Ey], (3 N_p)^2, symmetric.
    pub a: DMatrix<f64>,
    /// Coupling to this element's global unknowns (trace DOFs on interior
    /// faces, plus one column per touched conductor).
    pub a_bar: DMatrix<f64>,
    /// Element contribution to the trace-trace block (stabilization mass on
    /// interior faces).
    pub a_hat: DMatrix<f64>,
    /// Local right-hand side.
    pub f: DVector<f64>,
    /// Global unknown index of each column of `a_bar`, ascending.
    pub global_cols: Vec<usize>,
    lu: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
}

/// Condensed element contribution: S_k over the element's global unknowns
/// and the RHS reduction g_k (enters the global RHS with a minus sign).
pub struct Condensed {
    pub s: DMatrix<f64>,
    pub g: DVector<f64>,
    pub global_cols: Vec<usize>,
}

/// Schur complement of the local block system: (A-hat - A-barᵀ A⁻¹ A-bar,
/// A-barᵀ A⁻¹ F).
pub fn schur_complement(
    lu: &nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    a_bar: &DMatrix<f64>,
    a_hat: &DMatrix<f64>,
    f: &DVector<f64>,
    k: usize,
) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let ainv_abar = lu
        .solve(a_bar)
        .ok_or(Error::SingularLocalSystem(k))?;
    let ainv_f = lu.solve(f).ok_or(Error::SingularLocalSystem(k))?;
    let s = a_hat - a_bar.transpose() * ainv_abar;
    let g = a_bar.transpose() * ainv_f;
    Ok((s, g))
}

impl LocalSystem {
    pub fn condense(&self) -> Result<Condensed> {
        let (s, g) = schur_complement(&self.lu, &self.a_bar, &self.a_hat, &self.f, self.k)?;
        Ok(Condensed {
            s,
            g,
            global_cols: self.global_cols.clone(),
        })
    }

    /// Recover the local unknowns from the solved global vector.
    pub fn recover(&self, global: &[f64]) -> Result<DVector<f64>> {
        let mut rhs = self.f.clone();
        if !self.global_cols.is_empty() {
            let x = DVector::from_iterator(
                self.global_cols.len(),
                self.global_cols.iter().map(|&g| global[g]),
            );
            rhs -= &self.a_bar * x;
        }
        self.lu.solve(&rhs).ok_or(Error::SingularLocalSystem(self.k))
    }
}

/// Assemble the block system of element `k`.
pub fn assemble_local(
    mesh: &Mesh2D,
    re: &RefElement,
    dof_map: &TraceDofMap,
    k: usize,
    data: &ProblemData,
) -> Result<LocalSystem> {
    let n_p = re.n_p;
    let n_fp = re.n_fp;
    let nq = re.quad_points.len();
    let [va, vb, vc] = mesh.element_coords(k);
    let j = [
        [vb[0] - va[0], vc[0] - va[0]],
        [vb[1] - va[1], vc[1] - va[1]],
    ];
    let det_j = j[0][0] * j[1][1] - j[0][1] * j[1][0];
    debug_assert!(det_j > 0.0, "orientation normalized at mesh build");
    let j_inv = [
        [j[1][1] / det_j, -j[0][1] / det_j],
        [-j[1][0] / det_j, j[0][0] / det_j],
    ];

    let ek = data.permittivity[k];
    let tau = ek * stabilization_tau(mesh, k, data.tau0)?;

    // physical derivatives at quadrature points
    let (dr, ds) = (&re.dphi_quad.0, &re.dphi_quad.1);
    let dx = dr * j_inv[0][0] + ds * j_inv[1][0];
    let dy = dr * j_inv[0][1] + ds * j_inv[1][1];

    let w: Vec<f64> = re.quad_weights.iter().map(|&q| q * det_j).collect();
    let weighted = |m: &DMatrix<f64>| {
        let mut wm = m.clone();
        for q in 0..nq {
            for c in 0..n_p {
                wm[(q, c)] *= w[q];
            }
        }
        wm
    };
    let phi_w = weighted(&re.phi_quad);
    let m_vol = re.phi_quad.transpose() * &phi_w;
    let gx = phi_w.transpose() * &dx;
    let gy = phi_w.transpose() * &dy;

    let n_loc = 3 * n_p;
    let mut a = DMatrix::zeros(n_loc, n_loc);
    let mut f = DVector::zeros(n_loc);

    a.view_mut((0, n_p), (n_p, n_p)).copy_from(&(ek * &gx));
    a.view_mut((0, 2 * n_p), (n_p, n_p)).copy_from(&(ek * &gy));
    a.view_mut((n_p, 0), (n_p, n_p)).copy_from(&(ek * gx.transpose()));
    a.view_mut((2 * n_p, 0), (n_p, n_p)).copy_from(&(ek * gy.transpose()));
    a.view_mut((n_p, n_p), (n_p, n_p)).copy_from(&(-ek * &m_vol));
    a.view_mut((2 * n_p, 2 * n_p), (n_p, n_p)).copy_from(&(-ek * &m_vol));

    // volume source
    for q in 0..nq {
        let [xr, yr] = re.quad_points[q];
        let x = va[0] + j[0][0] * xr + j[0][1] * yr;
        let y = va[1] + j[1][0] * xr + j[1][1] * yr;
        let rho = (data.source)(x, y) * w[q];
        for i in 0..n_p {
            f[i] += re.phi_quad[(q, i)] * rho;
        }
    }

    // face terms; collect trace/conductor columns keyed by global index
    let mut cols: std::collections::BTreeMap<usize, DVector<f64>> = std::collections::BTreeMap::new();
    for lf in 0..3 {
        let face = &mesh.faces[mesh.elem_faces[k][lf]];
        let (pu, pw) = mesh.face_endpoints(k, lf);
        let l = mesh.face_length(k, lf);
        let nvec = mesh.outward_normal(k, lf);
        let fm = &re.fmask[lf];
        let em = l * &re.edge_mass;

        // edge data integrals r_i = L * sum_q w_q phi_i(q) f(x_q)
        let edge_moments = |fun: &dyn Fn(f64, f64) -> f64| -> DVector<f64> {
            let mut r = DVector::zeros(n_fp);
            for (q, &t) in re.edge_quad_points.iter().enumerate() {
                let x = pu[0] + t * (pw[0] - pu[0]);
                let y = pu[1] + t * (pw[1] - pu[1]);
                let v = fun(x, y) * re.edge_quad_weights[q] * l;
                for i in 0..n_fp {
                    r[i] += re.edge_phi_quad[(q, i)] * v;
                }
            }
            r
        };

        match face.tag {
            BoundaryTag::Interior | BoundaryTag::Dirichlet(_) => {
                for (i_, &gi) in fm.iter().enumerate() {
                    for (j_, &gj) in fm.iter().enumerate() {
                        a[(gi, gj)] += tau * em[(i_, j_)];
                    }
                }
            }
            _ => {}
        }

        match face.tag {
            BoundaryTag::Interior => {
                let gdofs = dof_map.face_trace_dofs(mesh, re, k, lf)?;
                for (j_, &g) in gdofs.iter().enumerate() {
                    let col = cols
                        .entry(g)
                        .or_insert_with(|| DVector::zeros(n_loc));
                    for (i_, &gi) in fm.iter().enumerate() {
                        col[gi] -= tau * em[(i_, j_)];
                        col[n_p + gi] -= ek * nvec[0] * em[(i_, j_)];
                        col[2 * n_p + gi] -= ek * nvec[1] * em[(i_, j_)];
                    }
                }
            }
            BoundaryTag::Dirichlet(marker) => {
                let r = edge_moments(&|x, y| (data.dirichlet)(marker, x, y));
                for (i_, &gi) in fm.iter().enumerate() {
                    f[gi] += tau * r[i_];
                    f[n_p + gi] += ek * nvec[0] * r[i_];
                    f[2 * n_p + gi] += ek * nvec[1] * r[i_];
                }
            }
            BoundaryTag::Neumann(marker) => {
                // prescribed normal flux replaces both numerical fluxes
                for (i_, &gi) in fm.iter().enumerate() {
                    for (j_, &gj) in fm.iter().enumerate() {
                        a[(gi, n_p + gj)] -= ek * nvec[0] * em[(i_, j_)];
                        a[(gi, 2 * n_p + gj)] -= ek * nvec[1] * em[(i_, j_)];
                        a[(n_p + gi, gj)] -= ek * nvec[0] * em[(i_, j_)];
                        a[(2 * n_p + gi, gj)] -= ek * nvec[1] * em[(i_, j_)];
                    }
                }
                let r = edge_moments(&|x, y| (data.neumann)(marker, x, y));
                for (i_, &gi) in fm.iter().enumerate() {
                    f[gi] -= r[i_];
                }
            }
            BoundaryTag::Floating(eta) => {
                let g = dof_map.conductor_dof(eta);
                let col = cols.entry(g).or_insert_with(|| DVector::zeros(n_loc));
                let w1 = l * &re.edge_integrals;
                for (i_, &gi) in fm.iter().enumerate() {
                    col[n_p + gi] -= ek * nvec[0] * w1[i_];
                    col[2 * n_p + gi] -= ek * nvec[1] * w1[i_];
                }
            }
        }
    }

    let global_cols: Vec<usize> = cols.keys().copied().collect();
    let mut a_bar = DMatrix::zeros(n_loc, global_cols.len());
    for (c, (_, col)) in cols.iter().enumerate() {
        a_bar.set_column(c, col);
    }

    // trace-trace stabilization mass, this element's side of each face
    let pos: std::collections::HashMap<usize, usize> = global_cols
        .iter()
        .enumerate()
        .map(|(c, &g)| (g, c))
        .collect();
    let mut a_hat = DMatrix::zeros(global_cols.len(), global_cols.len());
    for lf in 0..3 {
        let face = &mesh.faces[mesh.elem_faces[k][lf]];
        if face.tag != BoundaryTag::Interior {
            continue;
        }
        let l = mesh.face_length(k, lf);
        let em = l * &re.edge_mass;
        let gdofs = dof_map.face_trace_dofs(mesh, re, k, lf)?;
        for (i_, &gi) in gdofs.iter().enumerate() {
            for (j_, &gj) in gdofs.iter().enumerate() {
                a_hat[(pos[&gi], pos[&gj])] += tau * em[(i_, j_)];
            }
        }
    }

    let lu = a.clone().lu();
    // singularity test on the pivots; the determinant itself underflows
    // when every entry carries a permittivity factor near 1e-12
    let pivots = lu.u().diagonal().abs();
    if pivots.min() <= 1e-14 * pivots.max() {
        return Err(Error::SingularLocalSystem(k));
    }
    Ok(LocalSystem {
        k,
        a,
        a_bar,
        a_hat,
        f,
        global_cols,
        lu,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::build_dof_map;
    use crate::basis::build_reference_element;
    use crate::mesh::{build_skeleton, generate_unit_square};

    fn dense_face_mass(re: &RefElement, l: f64) -> DMatrix<f64> {
        l * re.edge_mass.clone()
    }

    fn two_triangle_mesh(tags: [BoundaryTag; 4]) -> Mesh2D {
        build_skeleton(
            vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
            vec![[0, 1, 2], [0, 2, 3]],
            &[
                (0, 1, tags[0]),
                (1, 2, tags[1]),
                (2, 3, tags[2]),
                (3, 0, tags[3]),
            ],
        )
        .unwrap()
    }

    #[test]
    fn tau_definition_and_scaling() {
        let mesh = two_triangle_mesh([BoundaryTag::Dirichlet(0); 4]);
        // element 0 is the unit right triangle with legs 1
        assert!((stabilization_tau(&mesh, 0, 1.0).unwrap() - 1.0).abs() < 1e-15);
        let coarse = generate_unit_square(2).unwrap();
        let fine = generate_unit_square(4).unwrap();
        let tc = stabilization_tau(&coarse, 0, 1.0).unwrap();
        let tf = stabilization_tau(&fine, 0, 1.0).unwrap();
        assert!((tf / tc - 2.0).abs() < 1e-12);
        assert!(matches!(
            stabilization_tau(&mesh, 0, 0.0),
            Err(Error::NonPositiveTau(_))
        ));
    }

    #[test]
    fn field_mass_block_matches_quadrature_oracle() {
        // p=1, unit right triangle, eps=1: A^{EE} = -(mass matrix)
        let mesh = two_triangle_mesh([BoundaryTag::Dirichlet(0); 4]);
        let re = build_reference_element(1).unwrap();
        let map = build_dof_map(&mesh, &re);
        let data = ProblemData::uniform(&mesh, 1.0);
        let sys = assemble_local(&mesh, &re, &map, 0, &data).unwrap();
        // independent oracle: integrate l_i l_j over the physical triangle
        // with a dense high-order rule
        let re_hi = build_reference_element(5).unwrap();
        let det_j = 2.0 * mesh.element_area(0);
        let p1 = re.evaluate_basis(&re_hi.quad_points).unwrap();
        let n_p = re.n_p;
        for i in 0..n_p {
            for j in 0..n_p {
                let mij: f64 = (0..re_hi.quad_points.len())
                    .map(|q| re_hi.quad_weights[q] * det_j * p1[(q, i)] * p1[(q, j)])
                    .sum();
                assert!(
                    (sys.a[(n_p + i, n_p + j)] + mij).abs() < 1e-13,
                    "Ex block ({i},{j})"
                );
                assert!(
                    (sys.a[(2 * n_p + i, 2 * n_p + j)] + mij).abs() < 1e-13,
                    "Ey block ({i},{j})"
                );
            }
        }
    }

    #[test]
    fn local_matrix_symmetric_and_invertible() {
        for p in [1, 2, 3] {
            let mesh = generate_unit_square(3).unwrap();
            let re = build_reference_element(p).unwrap();
            let map = build_dof_map(&mesh, &re);
            let data = ProblemData::uniform(&mesh, 1.0);
            for k in 0..mesh.n_elements() {
                let sys = assemble_local(&mesh, &re, &map, k, &data).unwrap();
                let asym = (&sys.a - sys.a.transpose()).abs().max();
                assert!(asym < 1e-12 * sys.a.abs().max(), "p={p} k={k}");
            }
        }
    }

    #[test]
    fn neumann_face_carries_no_stabilization() {
        let with_neu = two_triangle_mesh([
            BoundaryTag::Neumann(0),
            BoundaryTag::Dirichlet(0),
            BoundaryTag::Dirichlet(0),
            BoundaryTag::Dirichlet(0),
        ]);
        let all_dir = two_triangle_mesh([BoundaryTag::Dirichlet(0); 4]);
        let re = build_reference_element(2).unwrap();
        let data = ProblemData::uniform(&all_dir, 1.0);
        let map_n = build_dof_map(&with_neu, &re);
        let map_d = build_dof_map(&all_dir, &re);
        let sys_n = assemble_local(&with_neu, &re, &map_n, 0, &data).unwrap();
        let sys_d = assemble_local(&all_dir, &re, &map_d, 0, &data).unwrap();
        // the phi-phi difference is exactly tau times the face mass of the
        // retagged face (local face 0, length 1)
        let n_p = re.n_p;
        let tau = stabilization_tau(&all_dir, 0, 1.0).unwrap();
        let em = dense_face_mass(&re, 1.0);
        let fm = &re.fmask[0];
        let mut diff = (sys_d.a.view((0, 0), (n_p, n_p))
            - sys_n.a.view((0, 0), (n_p, n_p)))
        .clone_owned();
        for (i_, &gi) in fm.iter().enumerate() {
            for (j_, &gj) in fm.iter().enumerate() {
                diff[(gi, gj)] -= tau * em[(i_, j_)];
            }
        }
        assert!(diff.abs().max() < 1e-12);
    }

    #[test]
    fn floating_face_adds_single_column_with_flux_integrals() {
        let mesh = two_triangle_mesh([
            BoundaryTag::Floating(1),
            BoundaryTag::Dirichlet(0),
            BoundaryTag::Dirichlet(0),
            BoundaryTag::Dirichlet(0),
        ]);
        let re = build_reference_element(2).unwrap();
        let map = build_dof_map(&mesh, &re);
        let mut data = ProblemData::uniform(&mesh, 1.0);
        data.charges = vec![0.0];
        let sys = assemble_local(&mesh, &re, &map, 0, &data).unwrap();
        // one interior face (diagonal) plus the conductor scalar
        assert_eq!(sys.global_cols.len(), re.n_fp + 1);
        let cond_col = sys
            .global_cols
            .iter()
            .position(|&g| g == map.conductor_dof(1))
            .unwrap();
        // oracle: entries are -eps * n_d * integral of the edge basis over
        // the face (face 0: y=0, normal (0,-1), length 1)
        let n_p = re.n_p;
        let col = sys.a_bar.column(cond_col);
        for i in 0..n_p {
            assert!(col[i].abs() < 1e-14, "no phi coupling to the conductor");
        }
        for (i_, &gi) in re.fmask[0].iter().enumerate() {
            let integral = re.edge_integrals[i_];
            assert!((col[n_p + gi] - 0.0).abs() < 1e-14);
            assert!((col[2 * n_p + gi] - integral).abs() < 1e-13);
        }
    }

    #[test]
    fn schur_complement_matches_hand_example() {
        // A = [[2, 0], [0, 4]], Abar = [[1], [2]], Ahat = [[5]], F = [2, 4]
        // S = 5 - [1 2] diag(1/2, 1/4) [1; 2] = 5 - (1/2 + 1) = 3.5
        // g = [1 2] diag(1/2,1/4) [2; 4] = 1 + 2 = 3
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 4.0]);
        let a_bar = DMatrix::from_row_slice(2, 1, &[1.0, 2.0]);
        let a_hat = DMatrix::from_row_slice(1, 1, &[5.0]);
        let f = DVector::from_row_slice(&[2.0, 4.0]);
        let lu = a.lu();
        let (s, g) = schur_complement(&lu, &a_bar, &a_hat, &f, 0).unwrap();
        assert!((s[(0, 0)] - 3.5).abs() < 1e-15);
        assert!((g[0] - 3.0).abs() < 1e-15);
    }

    #[test]
    fn condensed_blocks_symmetric_and_zero_data_gives_zero_g() {
        let mesh = generate_unit_square(2).unwrap();
        let re = build_reference_element(2).unwrap();
        let map = build_dof_map(&mesh, &re);
        let data = ProblemData::uniform(&mesh, 1.0);
        for k in 0..mesh.n_elements() {
            let sys = assemble_local(&mesh, &re, &map, k, &data).unwrap();
            let c = sys.condense().unwrap();
            let asym = (&c.s - c.s.transpose()).abs().max();
            assert!(asym < 1e-10 * c.s.abs().max().max(1.0), "k={k}");
            assert!(c.g.abs().max() < 1e-14, "zero data, k={k}");
        }
    }

    #[test]
    fn block_scaling_under_refinement() {
        // volume blocks scale as h^2, interior-face stabilization as h*tau
        let re = build_reference_element(1).unwrap();
        let norms = |n: usize| {
            let mesh = generate_unit_square(n).unwrap();
            let map = build_dof_map(&mesh, &re);
            let data = ProblemData::uniform(&mesh, 1.0);
            // central element so all faces behave alike
            let k = mesh.n_elements() / 2;
            let sys = assemble_local(&mesh, &re, &map, k, &data).unwrap();
            let n_p = re.n_p;
            let vol = sys.a.view((n_p, n_p), (n_p, n_p)).abs().max();
            let face = sys.a_hat.abs().max();
            (vol, face)
        };
        let (v4, f4) = norms(4);
        let (v8, f8) = norms(8);
        assert!((v4 / v8 - 4.0).abs() < 0.2, "volume block ~ h^2");
        // tau ~ 1/h cancels one power: a_hat entries stay O(1)
        assert!((f4 / f8 - 1.0).abs() < 0.2, "face block ~ h * tau");
    }

    #[test]
    fn dirichlet_data_enters_rhs_via_flux_table() {
        // constant f^D = 3 on all faces: F^phi face term = tau * 3 * edge
        // integrals, F^E = eps * n * 3 * edge integrals
        let mesh = two_triangle_mesh([BoundaryTag::Dirichlet(0); 4]);
        let re = build_reference_element(1).unwrap();
        let map = build_dof_map(&mesh, &re);
        let mut data = ProblemData::uniform(&mesh, 1.0);
        data.dirichlet = Box::new(|_, _, _| 3.0);
        let sys = assemble_local(&mesh, &re, &map, 0, &data).unwrap();
        // oracle for element 0 = triangle (0,0),(1,0),(1,1), boundary faces
        // 0 (y=0, L=1, n=(0,-1)) and 1 (x=1, L=1, n=(1,0))
        let tau = stabilization_tau(&mesh, 0, 1.0).unwrap();
        let n_p = re.n_p;
        let mut expect = DVector::zeros(3 * n_p);
        for (lf, nvec, l) in [(0usize, [0.0, -1.0], 1.0), (1, [1.0, 0.0], 1.0)] {
            for (i_, &gi) in re.fmask[lf].iter().enumerate() {
                let r = 3.0 * l * re.edge_integrals[i_];
                expect[gi] += tau * r;
                expect[n_p + gi] += nvec[0] * r;
                expect[2 * n_p + gi] += nvec[1] * r;
            }
        }
        assert!((sys.f - expect).abs().max() < 1e-13);
    }
}
