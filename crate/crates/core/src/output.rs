//! Output writers: run summary (JSON), fields (legacy ASCII VTK with
//! per-element disconnected points), line samples (CSV), convergence
//! tables (CSV) and a plain-text sparse matrix dump.

use crate::basis::RefElement;
use crate::error::Result;
use crate::mesh::Mesh2D;
use crate::recovery::{LineSample, Solution};
use crate::sparse::Csr;
use serde::Serialize;
use std::io::Write as _;
use std::path::Path;

/// One conductor's entry in the run summary.
#[derive(Debug, Clone, Serialize)]
pub struct ConductorSummary {
    pub index: usize,
    pub potential: f64,
    pub charge_prescribed: f64,
    pub charge_computed: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolverSummary {
    pub method: String,
    pub iterations: usize,
    pub relative_residual: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub factor_nnz: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub condition_estimate: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct DimensionSummary {
    pub elements: usize,
    pub interior_faces: usize,
    pub nodes_per_element: usize,
    pub nodes_per_face: usize,
    pub conductors: usize,
    pub trace_dofs: usize,
    pub matrix_nnz: usize,
}

/// L2 errors against the scenario's exact solution, when one exists.
#[derive(Debug, Clone, Serialize)]
pub struct ErrorSummary {
    pub phi_l2: f64,
    pub field_l2: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub conductor_abs: Option<f64>,
}

/// Wall-clock timings in seconds. Excluded from determinism comparisons.
#[derive(Debug, Clone, Default, Serialize)]
pub struct Timings {
    pub assemble_s: f64,
    pub solve_s: f64,
    pub recover_s: f64,
    pub total_s: f64,
}

/// Full run summary; serialized to `summary.json`. Field order is fixed so
/// that identical runs produce byte-identical output apart from `timings`.
#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub scenario: String,
    pub order: usize,
    pub tau0: f64,
    pub dimensions: DimensionSummary,
    pub solver: SolverSummary,
    pub conductors: Vec<ConductorSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub errors: Option<ErrorSummary>,
    pub timings: Timings,
}

/// Write the summary as pretty-printed JSON.
pub fn write_summary(path: &Path, summary: &Summary) -> Result<()> {
    let mut file = std::fs::File::create(path)?;
    let text = serde_json::to_string_pretty(summary)
        .expect("summary serialization cannot fail");
    file.write_all(text.as_bytes())?;
    file.write_all(b"\n")?;
    Ok(())
}

/// Format a float with 17 significant digits (round-trip exact).
fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

/// Write line samples as CSV: `s,x,y,phi,Ex,Ey,inside`.
pub fn write_line_csv(path: &Path, samples: &[LineSample]) -> Result<()> {
    let mut out = String::from("s,x,y,phi,Ex,Ey,inside\n");
    for s in samples {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            fmt17(s.s),
            fmt17(s.x),
            fmt17(s.y),
            fmt17(s.phi),
            fmt17(s.ex),
            fmt17(s.ey),
            if s.inside { 1 } else { 0 }
        ));
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// One row of a convergence table.
#[derive(Debug, Clone)]
pub struct ConvergenceRow {
    pub h: f64,
    pub dof: usize,
    pub err_phi_l2: f64,
    pub err_e_l2: f64,
    pub fpc_abs_err: f64,
    /// log2(previous error / this error); `None` on the first row.
    pub observed_rate: Option<f64>,
}

/// Write the convergence table as CSV:
/// `h,dof,err_phi_L2,err_E_L2,fpc_abs_err,observed_rate` (rate blank on
/// the first row).
pub fn write_convergence_csv(path: &Path, rows: &[ConvergenceRow]) -> Result<()> {
    let mut out = String::from("h,dof,err_phi_L2,err_E_L2,fpc_abs_err,observed_rate\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            fmt17(r.h),
            r.dof,
            fmt17(r.err_phi_l2),
            fmt17(r.err_e_l2),
            fmt17(r.fpc_abs_err),
            r.observed_rate.map(fmt17).unwrap_or_default()
        ));
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Dump a sparse matrix as text: header `n nnz`, then one `row col value`
/// line per stored entry, 0-based indices.
pub fn write_matrix(path: &Path, a: &Csr) -> Result<()> {
    let mut out = format!("{} {}\n", a.n, a.nnz());
    for i in 0..a.n {
        for idx in a.row_ptr[i]..a.row_ptr[i + 1] {
            out.push_str(&format!("{i} {} {}\n", a.col_idx[idx], fmt17(a.vals[idx])));
        }
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Sub-triangulation of the reference node lattice: p^2 triangles over
/// the (ix, iy) rows, indices into the element's node ordering.
fn subtriangles(p: usize) -> Vec<[usize; 3]> {
    // node index of lattice point (ix, iy): rows of decreasing length
    let row_base: Vec<usize> = (0..=p)
        .scan(0usize, |acc, iy| {
            let b = *acc;
            *acc += p - iy + 1;
            Some(b)
        })
        .collect();
    let idx = |ix: usize, iy: usize| row_base[iy] + ix;
    let mut tris = Vec::with_capacity(p * p);
    for iy in 0..p {
        for ix in 0..(p - iy) {
            tris.push([idx(ix, iy), idx(ix + 1, iy), idx(ix, iy + 1)]);
            if ix + 1 < p - iy + 1 && ix + iy + 2 <= p {
                tris.push([idx(ix + 1, iy), idx(ix + 1, iy + 1), idx(ix, iy + 1)]);
            }
        }
    }
    tris
}

/// Write the solution as a legacy ASCII VTK unstructured grid. Every
/// element contributes its own (disconnected) points so the
/// discontinuous nodal fields are represented faithfully; each element is
/// split into p^2 linear sub-triangles. Point data: `phi` (scalar) and
/// `E` (3-vector with zero z-component).
pub fn write_vtk(path: &Path, mesh: &Mesh2D, re: &RefElement, sol: &Solution) -> Result<()> {
    let k_total = mesh.n_elements();
    let n_p = re.n_p;
    let tris = subtriangles(re.p);
    let mut out = String::new();
    out.push_str("# vtk DataFile Version 3.0\n");
    out.push_str("hdg2d discontinuous nodal fields\n");
    out.push_str("ASCII\nDATASET UNSTRUCTURED_GRID\n");
    out.push_str(&format!("POINTS {} double\n", k_total * n_p));
    for k in 0..k_total {
        let [va, vb, vc] = mesh.element_coords(k);
        for node in &re.nodes {
            let x = va[0] + (vb[0] - va[0]) * node[0] + (vc[0] - va[0]) * node[1];
            let y = va[1] + (vb[1] - va[1]) * node[0] + (vc[1] - va[1]) * node[1];
            out.push_str(&format!("{x:.17e} {y:.17e} 0\n"));
        }
    }
    let n_cells = k_total * tris.len();
    out.push_str(&format!("CELLS {} {}\n", n_cells, 4 * n_cells));
    for k in 0..k_total {
        let base = k * n_p;
        for t in &tris {
            out.push_str(&format!("3 {} {} {}\n", base + t[0], base + t[1], base + t[2]));
        }
    }
    out.push_str(&format!("CELL_TYPES {n_cells}\n"));
    for _ in 0..n_cells {
        out.push_str("5\n");
    }
    out.push_str(&format!("POINT_DATA {}\n", k_total * n_p));
    out.push_str("SCALARS phi double 1\nLOOKUP_TABLE default\n");
    for k in 0..k_total {
        for i in 0..n_p {
            out.push_str(&format!("{:.17e}\n", sol.phi[k][i]));
        }
    }
    out.push_str("VECTORS E double\n");
    for k in 0..k_total {
        for i in 0..n_p {
            out.push_str(&format!("{:.17e} {:.17e} 0\n", sol.ex[k][i], sol.ey[k][i]));
        }
    }
    std::fs::write(path, out)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::build_reference_element;
    use crate::problem::ProblemData;
    use crate::recovery::evaluate_line;
    use crate::scenarios::manufactured_square;
    use crate::solve_problem;
    use crate::sparse::Triplets;

    #[test]
    fn subtriangles_cover_lattice() {
        for p in 1..=6 {
            let tris = subtriangles(p);
            assert_eq!(tris.len(), p * p, "p={p}");
            let n_p = (p + 1) * (p + 2) / 2;
            // every node index valid, every node used
            let mut used = vec![false; n_p];
            for t in &tris {
                for &i in t {
                    assert!(i < n_p);
                    used[i] = true;
                }
            }
            assert!(used.iter().all(|&u| u), "p={p}");
            // total sub-triangle area equals the reference area 1/2
            let re = build_reference_element(p).unwrap();
            let area: f64 = tris
                .iter()
                .map(|t| {
                    let a = re.nodes[t[0]];
                    let b = re.nodes[t[1]];
                    let c = re.nodes[t[2]];
                    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
                })
                .sum();
            assert!((area - 0.5).abs() < 1e-12, "p={p}: area {area}");
        }
    }

    #[test]
    fn vtk_and_csv_writers_roundtrip_structure() {
        let dir = tempfile::tempdir().unwrap();
        let sc = manufactured_square(2, 1.0).unwrap();
        let re = build_reference_element(2).unwrap();
        let (sol, _, sys) = solve_problem(&sc.mesh, &re, &sc.data).unwrap();

        let vtk = dir.path().join("field.vtk");
        write_vtk(&vtk, &sc.mesh, &re, &sol).unwrap();
        let text = std::fs::read_to_string(&vtk).unwrap();
        let k = sc.mesh.n_elements();
        assert!(text.contains(&format!("POINTS {} double", k * re.n_p)));
        assert!(text.contains(&format!("CELLS {} {}", k * 4, k * 16)));
        assert!(text.contains("SCALARS phi double 1"));
        assert!(text.contains("VECTORS E double"));

        let samples =
            evaluate_line(&sc.mesh, &re, &sol, [0.0, 0.5], [1.0, 0.5], 11).unwrap();
        let csv = dir.path().join("line.csv");
        write_line_csv(&csv, &samples).unwrap();
        let text = std::fs::read_to_string(&csv).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "s,x,y,phi,Ex,Ey,inside");
        assert_eq!(lines.len(), 12);
        // round-trip a sampled phi value through the printed 17 digits
        let mid: Vec<&str> = lines[6].split(',').collect();
        let phi_back: f64 = mid[3].parse().unwrap();
        assert_eq!(phi_back, samples[5].phi);

        let mtx = dir.path().join("matrix.txt");
        write_matrix(&mtx, &sys.matrix).unwrap();
        let text = std::fs::read_to_string(&mtx).unwrap();
        let mut it = text.lines();
        let header: Vec<usize> = it
            .next()
            .unwrap()
            .split_whitespace()
            .map(|t| t.parse().unwrap())
            .collect();
        assert_eq!(header, vec![sys.n_dof, sys.matrix.nnz()]);
        assert_eq!(it.count(), sys.matrix.nnz());
    }

    #[test]
    fn matrix_dump_parses_back_exactly() {
        let mut t = Triplets::new(3);
        t.push(0, 0, 1.5);
        t.push(2, 1, -2.25);
        t.push(1, 2, 1.0 / 3.0);
        let a = t.to_csr();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.txt");
        write_matrix(&path, &a).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        lines.next();
        for line in lines {
            let toks: Vec<&str> = line.split_whitespace().collect();
            let (i, j): (usize, usize) = (toks[0].parse().unwrap(), toks[1].parse().unwrap());
            let v: f64 = toks[2].parse().unwrap();
            assert_eq!(v, a.get(i, j));
        }
    }

    #[test]
    fn summary_json_is_deterministic() {
        let mk = |t: f64| Summary {
            scenario: "manufactured_square".into(),
            order: 2,
            tau0: 1.0,
            dimensions: DimensionSummary {
                elements: 8,
                interior_faces: 8,
                nodes_per_element: 6,
                nodes_per_face: 3,
                conductors: 0,
                trace_dofs: 24,
                matrix_nnz: 100,
            },
            solver: SolverSummary {
                method: "cholesky".into(),
                iterations: 0,
                relative_residual: 1e-15,
                factor_nnz: Some(120),
                condition_estimate: None,
            },
            conductors: vec![],
            errors: None,
            timings: Timings {
                total_s: t,
                ..Default::default()
            },
        };
        let dir = tempfile::tempdir().unwrap();
        let (p1, p2) = (dir.path().join("a.json"), dir.path().join("b.json"));
        write_summary(&p1, &mk(0.1)).unwrap();
        write_summary(&p2, &mk(0.2)).unwrap();
        let strip = |p: &Path| {
            let v: serde_json::Value =
                serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap();
            let mut v = v;
            v.as_object_mut().unwrap().remove("timings");
            serde_json::to_string(&v).unwrap()
        };
        assert_eq!(strip(&p1), strip(&p2));
        assert_ne!(
            std::fs::read_to_string(&p1).unwrap(),
            std::fs::read_to_string(&p2).unwrap()
        );
    }

    #[test]
    fn convergence_csv_rate_column() {
        let rows = vec![
            ConvergenceRow {
                h: 0.5,
                dof: 10,
                err_phi_l2: 1e-2,
                err_e_l2: 1e-1,
                fpc_abs_err: 0.0,
                observed_rate: None,
            },
            ConvergenceRow {
                h: 0.25,
                dof: 40,
                err_phi_l2: 2.5e-3,
                err_e_l2: 5e-2,
                fpc_abs_err: 0.0,
                observed_rate: Some(2.0),
            },
        ];
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("conv.csv");
        write_convergence_csv(&path, &rows).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "h,dof,err_phi_L2,err_E_L2,fpc_abs_err,observed_rate");
        assert!(lines[1].ends_with(','), "first row has a blank rate");
        assert_eq!(lines.len(), 3);
        let rate: f64 = lines[2].rsplit(',').next().unwrap().parse().unwrap();
        assert_eq!(rate, 2.0);
    }

    // sanity: the solve used above is real
    #[test]
    fn vtk_of_constant_solution_has_constant_phi() {
        let sc_mesh = crate::mesh::generate_unit_square(2).unwrap();
        let re = build_reference_element(1).unwrap();
        let mut data = ProblemData::uniform(&sc_mesh, 1.0);
        data.dirichlet = Box::new(|_, _, _| 5.0);
        let (sol, _, _) = solve_problem(&sc_mesh, &re, &data).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.vtk");
        write_vtk(&path, &sc_mesh, &re, &sol).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let start = text.find("LOOKUP_TABLE default\n").unwrap() + "LOOKUP_TABLE default\n".len();
        for line in text[start..].lines().take(sc_mesh.n_elements() * re.n_p) {
            let v: f64 = line.trim().parse().unwrap();
            assert!((v - 5.0).abs() < 1e-9, "{v}");
        }
    }
}
