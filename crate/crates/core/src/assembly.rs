//! Global unknown numbering and assembly of the condensed trace system.
//!
//! Global unknowns are the trace values on interior skeleton faces
//! (N_fp contiguous DOFs per face, in mesh face order) followed by one
//! scalar per floating conductor. Dirichlet and Neumann faces carry no
//! trace DOFs. Trace node order on a face follows the canonical direction
//! from its lower-numbered to its higher-numbered vertex; element-local
//! edge nodes are matched against that direction by physical coordinates.

use crate::basis::RefElement;
use crate::error::{Error, Result};
use crate::local::{assemble_local, Condensed, LocalSystem};
use crate::mesh::{BoundaryTag, Mesh2D};
use crate::problem::ProblemData;
use crate::sparse::{Csr, Triplets};

/// Numbering of the global unknowns.
#[derive(Debug, Clone)]
pub struct TraceDofMap {
    /// First DOF of each interior face, by face index.
    face_base: Vec<Option<usize>>,
    /// DOF of each conductor scalar, index eta-1.
    conductor_base: usize,
    pub n_fp: usize,
    /// Number of interior skeleton faces N_f.
    pub n_faces: usize,
    /// Number of conductors M.
    pub m: usize,
    /// Total dimension N_f * N_fp + M.
    pub n_dof: usize,
}

/// N_dof for given skeleton size, nodes per face and conductor count.
pub fn trace_dimension(n_f: usize, n_fp: usize, m: usize) -> usize {
    n_f * n_fp + m
}

/// Unknown count of the unhybridized DG system on the same mesh:
/// potential plus both field components per element node.
pub fn dg_dimension(n_elements: usize, n_p: usize) -> usize {
    n_elements * n_p * 3
}

pub fn build_dof_map(mesh: &Mesh2D, re: &RefElement) -> TraceDofMap {
    let mut face_base = vec![None; mesh.faces.len()];
    let mut next = 0usize;
    let mut n_faces = 0usize;
    for (fi, face) in mesh.faces.iter().enumerate() {
        if face.tag == BoundaryTag::Interior {
            face_base[fi] = Some(next);
            next += re.n_fp;
            n_faces += 1;
        }
    }
    let m = mesh.conductor_count;
    TraceDofMap {
        face_base,
        conductor_base: next,
        n_fp: re.n_fp,
        n_faces,
        m,
        n_dof: next + m,
    }
}

impl TraceDofMap {
    /// Global DOF of conductor scalar `eta` (1-based).
    pub fn conductor_dof(&self, eta: usize) -> usize {
        debug_assert!(eta >= 1 && eta <= self.m);
        self.conductor_base + eta - 1
    }

    /// Base DOF of interior face `fi`, if it carries trace unknowns.
    pub fn face_base(&self, fi: usize) -> Option<usize> {
        self.face_base[fi]
    }

    /// Global trace DOFs seen from local face `lf` of element `k`, ordered
    /// by the element's edge-node order. Node identity across the two
    /// adjacent elements is established by physical coordinates.
    pub fn face_trace_dofs(
        &self,
        mesh: &Mesh2D,
        re: &RefElement,
        k: usize,
        lf: usize,
    ) -> Result<Vec<usize>> {
        let fi = mesh.elem_faces[k][lf];
        let base = self.face_base[fi].ok_or_else(|| {
            Error::InvalidGeometry(format!(
                "face {fi} carries no trace DOFs (element {k}, local face {lf})"
            ))
        })?;
        let (lo, hi) = mesh.faces[fi].vertices;
        let (p_lo, p_hi) = (mesh.vertices[lo], mesh.vertices[hi]);
        let (pu, pw) = mesh.face_endpoints(k, lf);
        let h = mesh.face_length(k, lf);
        let tol = 1e-12 * h;

        let mut dofs = Vec::with_capacity(re.n_fp);
        for &t in &re.edge_nodes {
            let x = [pu[0] + t * (pw[0] - pu[0]), pu[1] + t * (pw[1] - pu[1])];
            let mut found = None;
            for (m_, &s) in re.edge_nodes.iter().enumerate() {
                let y = [
                    p_lo[0] + s * (p_hi[0] - p_lo[0]),
                    p_lo[1] + s * (p_hi[1] - p_lo[1]),
                ];
                if (x[0] - y[0]).hypot(x[1] - y[1]) <= tol {
                    found = Some(m_);
                    break;
                }
            }
            let m_ = found.ok_or_else(|| {
                Error::InvalidGeometry(format!(
                    "edge node of element {k} face {lf} matches no canonical trace node"
                ))
            })?;
            dofs.push(base + m_);
        }
        Ok(dofs)
    }
}

/// Assembled global system over the trace and conductor unknowns.
#[derive(Debug, Clone)]
pub struct GlobalTraceSystem {
    pub matrix: Csr,
    pub rhs: Vec<f64>,
    pub n_dof: usize,
    /// Conductor count, for reporting.
    pub m: usize,
}

/// Scatter condensed element contributions into the global system and
/// attach the prescribed-charge rows.
pub fn assemble_global(
    condensed: &[Condensed],
    dof_map: &TraceDofMap,
    data: &ProblemData,
) -> Result<GlobalTraceSystem> {
    let n = dof_map.n_dof;
    if data.charges.len() != dof_map.m {
        return Err(Error::BadProblemData(format!(
            "{} charges for {} conductors",
            data.charges.len(),
            dof_map.m
        )));
    }
    let mut trip = Triplets::new(n);
    let mut rhs = vec![0.0f64; n];
    for c in condensed {
        for (i_, &gi) in c.global_cols.iter().enumerate() {
            debug_assert!(gi < n);
            rhs[gi] -= c.g[i_];
            for (j_, &gj) in c.global_cols.iter().enumerate() {
                trip.push(gi, gj, c.s[(i_, j_)]);
            }
        }
    }
    for eta in 1..=dof_map.m {
        rhs[dof_map.conductor_dof(eta)] += data.charges[eta - 1];
    }
    Ok(GlobalTraceSystem {
        matrix: trip.to_csr(),
        rhs,
        n_dof: n,
        m: dof_map.m,
    })
}

/// Full pipeline from mesh and data to the condensed global system,
/// keeping the local systems for field recovery.
pub fn assemble_system(
    mesh: &Mesh2D,
    re: &RefElement,
    data: &ProblemData,
) -> Result<(GlobalTraceSystem, Vec<LocalSystem>, TraceDofMap)> {
    data.validate(mesh)?;
    let dof_map = build_dof_map(mesh, re);
    let mut locals = Vec::with_capacity(mesh.n_elements());
    let mut condensed = Vec::with_capacity(mesh.n_elements());
    for k in 0..mesh.n_elements() {
        let sys = assemble_local(mesh, re, &dof_map, k, data)?;
        condensed.push(sys.condense()?);
        locals.push(sys);
    }
    let global = assemble_global(&condensed, &dof_map, data)?;
    Ok((global, locals, dof_map))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::build_reference_element;
    use crate::mesh::{build_skeleton, generate_annulus_with_fpc, generate_unit_square};
    use crate::sparse::{cholesky, min_degree_ordering, norm2};
    use nalgebra::{DMatrix, DVector};

    #[test]
    fn dof_counts() {
        let re2 = build_reference_element(2).unwrap();
        let two_tri = build_skeleton(
            vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
            vec![[0, 1, 2], [0, 2, 3]],
            &[
                (0, 1, BoundaryTag::Dirichlet(0)),
                (1, 2, BoundaryTag::Dirichlet(0)),
                (2, 3, BoundaryTag::Dirichlet(0)),
                (3, 0, BoundaryTag::Dirichlet(0)),
            ],
        )
        .unwrap();
        let map = build_dof_map(&two_tri, &re2);
        assert_eq!(map.n_dof, 3);

        let annulus = generate_annulus_with_fpc(0.001, 0.008, 0.012, 0.02, 16, 2, 2).unwrap();
        let map = build_dof_map(&annulus, &re2);
        assert_eq!(map.m, 1);
        assert_eq!(map.n_dof, map.n_faces * 3 + 1);
        assert_eq!(map.n_dof, trace_dimension(map.n_faces, 3, 1));
    }

    #[test]
    fn large_scale_dimension_formula() {
        // order 5 run with 126159 skeleton faces and one conductor
        assert_eq!(trace_dimension(126_159, 6, 1), 756_955);
    }

    #[test]
    fn unknown_ratio_decreases_with_order() {
        let mesh = generate_unit_square(8).unwrap();
        let mut prev = f64::INFINITY;
        for p in 1..=6 {
            let re = build_reference_element(p).unwrap();
            let map = build_dof_map(&mesh, &re);
            let ratio =
                map.n_dof as f64 / dg_dimension(mesh.n_elements(), re.n_p) as f64;
            assert!(ratio < prev, "p={p}: {ratio} !< {prev}");
            prev = ratio;
        }
    }

    #[test]
    fn shared_face_nodes_reconciled_by_coordinates() {
        for p in [1, 3, 5] {
            let mesh = generate_unit_square(3).unwrap();
            let re = build_reference_element(p).unwrap();
            let map = build_dof_map(&mesh, &re);
            for f in &mesh.faces {
                if f.adjacent.len() != 2 {
                    continue;
                }
                let (k0, l0) = f.adjacent[0];
                let (k1, l1) = f.adjacent[1];
                let d0 = map.face_trace_dofs(&mesh, &re, k0, l0).unwrap();
                let d1 = map.face_trace_dofs(&mesh, &re, k1, l1).unwrap();
                // same dof set; same dof at the same physical point
                for (n0, &g0) in d0.iter().enumerate() {
                    let t0 = re.edge_nodes[n0];
                    let (pu, pw) = mesh.face_endpoints(k0, l0);
                    let x0 = [pu[0] + t0 * (pw[0] - pu[0]), pu[1] + t0 * (pw[1] - pu[1])];
                    let n1 = d1.iter().position(|&g| g == g0).unwrap();
                    let t1 = re.edge_nodes[n1];
                    let (qu, qw) = mesh.face_endpoints(k1, l1);
                    let x1 = [qu[0] + t1 * (qw[0] - qu[0]), qu[1] + t1 * (qw[1] - qu[1])];
                    assert!((x0[0] - x1[0]).hypot(x0[1] - x1[1]) < 1e-13, "p={p}");
                }
            }
        }
    }

    #[test]
    fn assembled_matrix_symmetric() {
        let re = build_reference_element(2).unwrap();
        for mesh in [
            generate_unit_square(4).unwrap(),
            generate_annulus_with_fpc(0.001, 0.008, 0.012, 0.02, 16, 2, 2).unwrap(),
        ] {
            let data = ProblemData::uniform(&mesh, 1.0);
            let (sys, _, _) = assemble_system(&mesh, &re, &data).unwrap();
            assert!(sys.matrix.symmetry_error() <= 1e-10 * sys.matrix.max_abs());
        }
    }

    #[test]
    fn homogeneous_problem_has_zero_solution() {
        let mesh = generate_unit_square(3).unwrap();
        let re = build_reference_element(2).unwrap();
        let data = ProblemData::uniform(&mesh, 1.0);
        let (sys, locals, _) = assemble_system(&mesh, &re, &data).unwrap();
        assert!(norm2(&sys.rhs) == 0.0);
        let x = cholesky(&sys.matrix, &min_degree_ordering(&sys.matrix))
            .unwrap()
            .solve(&sys.rhs);
        assert!(norm2(&x) == 0.0);
        let u = locals[0].recover(&x).unwrap();
        assert!(u.abs().max() < 1e-15);
    }

    #[test]
    fn charge_count_mismatch_rejected() {
        let mesh = generate_unit_square(2).unwrap();
        let re = build_reference_element(1).unwrap();
        let map = build_dof_map(&mesh, &re);
        let mut data = ProblemData::uniform(&mesh, 1.0);
        data.charges = vec![1.0e-12];
        assert!(assemble_global(&[], &map, &data).is_err());
    }

    #[test]
    fn scatter_is_order_independent() {
        let mesh = generate_unit_square(3).unwrap();
        let re = build_reference_element(2).unwrap();
        let mut data = ProblemData::uniform(&mesh, 1.0);
        data.source = Box::new(|x, y| x + y);
        data.validate(&mesh).unwrap();
        let map = build_dof_map(&mesh, &re);
        let mut condensed = Vec::new();
        for k in 0..mesh.n_elements() {
            condensed.push(
                assemble_local(&mesh, &re, &map, k, &data)
                    .unwrap()
                    .condense()
                    .unwrap(),
            );
        }
        let a = assemble_global(&condensed, &map, &data).unwrap();
        condensed.reverse();
        let b = assemble_global(&condensed, &map, &data).unwrap();
        assert_eq!(a.matrix.row_ptr, b.matrix.row_ptr);
        assert_eq!(a.matrix.col_idx, b.matrix.col_idx);
        for (x, y) in a.matrix.vals.iter().zip(&b.matrix.vals) {
            assert!((x - y).abs() <= 1e-14 * x.abs().max(1.0));
        }
    }

    /// Solve the full unhybridized system (all local unknowns stacked with
    /// the trace/conductor unknowns) densely and compare its trace block
    /// with the condensed-path solution.
    fn monolithic_oracle(mesh: &Mesh2D, re: &RefElement, data: &ProblemData) {
        let (sys, locals, map) = assemble_system(mesh, re, data).unwrap();
        let xc = cholesky(&sys.matrix, &min_degree_ordering(&sys.matrix))
            .unwrap()
            .solve(&sys.rhs);

        let n_loc = 3 * re.n_p;
        let k_elems = mesh.n_elements();
        let n = k_elems * n_loc + map.n_dof;
        let mut big = DMatrix::zeros(n, n);
        let mut rhs = DVector::zeros(n);
        let off = |k: usize| k * n_loc;
        let toff = k_elems * n_loc;
        for (k, l) in locals.iter().enumerate() {
            big.view_mut((off(k), off(k)), (n_loc, n_loc)).copy_from(&l.a);
            for (c, &g) in l.global_cols.iter().enumerate() {
                for r in 0..n_loc {
                    big[(off(k) + r, toff + g)] += l.a_bar[(r, c)];
                    big[(toff + g, off(k) + r)] += l.a_bar[(r, c)];
                }
                for (c2, &g2) in l.global_cols.iter().enumerate() {
                    big[(toff + g, toff + g2)] += l.a_hat[(c, c2)];
                }
            }
            rhs.rows_mut(off(k), n_loc).copy_from(&l.f);
        }
        for eta in 1..=map.m {
            rhs[toff + map.conductor_dof(eta)] += data.charges[eta - 1];
        }
        let xm = big.lu().solve(&rhs).expect("monolithic solve");
        let scale = xc.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
        for g in 0..map.n_dof {
            assert!(
                (xm[toff + g] - xc[g]).abs() <= 1e-10 * scale,
                "trace dof {g}: {} vs {}",
                xm[toff + g],
                xc[g]
            );
        }
    }

    #[test]
    fn monolithic_dense_oracle_no_conductor() {
        let mesh = generate_unit_square(2).unwrap();
        let re = build_reference_element(1).unwrap();
        let mut data = ProblemData::uniform(&mesh, 1.0);
        let pi = std::f64::consts::PI;
        data.source = Box::new(move |x, y| 2.0 * pi * pi * (pi * x).sin() * (pi * y).sin());
        data.dirichlet = Box::new(|_, x, y| x - 0.5 * y);
        monolithic_oracle(&mesh, &re, &data);
    }

    #[test]
    fn monolithic_dense_oracle_with_conductor() {
        let mesh = build_skeleton(
            vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
            vec![[0, 1, 2], [0, 2, 3]],
            &[
                (0, 1, BoundaryTag::Floating(1)),
                (1, 2, BoundaryTag::Dirichlet(0)),
                (2, 3, BoundaryTag::Dirichlet(0)),
                (3, 0, BoundaryTag::Dirichlet(0)),
            ],
        )
        .unwrap();
        let re = build_reference_element(2).unwrap();
        let mut data = ProblemData::uniform(&mesh, 1.0);
        data.dirichlet = Box::new(|_, _, y| 2.0 * y);
        data.charges = vec![0.5];
        monolithic_oracle(&mesh, &re, &data);
    }
}
