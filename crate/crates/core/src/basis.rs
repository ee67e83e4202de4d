//! Reference-element machinery: order-p nodal Lagrange bases on the unit
//! triangle and the unit edge, derivative operators, quadrature rules and
//! face-node extraction maps.
//!
//! The reference triangle is the unit triangle with vertices (0,0), (1,0),
//! (0,1). Nodal operators are built through an orthonormal Koornwinder
//! basis: the generalized Vandermonde matrix maps modal to nodal
//! coefficients, so Lagrange values and gradients at arbitrary points come
//! out of modal evaluations followed by `V^{-1}`.
//!
//! Node placement is equidistant for p <= 3 and warp-and-blend for p >= 4,
//! which keeps the Vandermonde conditioning acceptable through p = 6. Edge
//! nodes always coincide with the volume nodes lying on that edge.

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};

/// Supported polynomial order range (matches the validated p sweep).
pub const MIN_ORDER: usize = 1;
pub const MAX_ORDER: usize = 6;

/// Number of faces per triangle.
pub const N_FE: usize = 3;

/// Nodal Lagrange reference element of order `p` on the unit triangle.
#[derive(Debug, Clone)]
pub struct RefElement {
    /// Polynomial order.
    pub p: usize,
    /// Volume nodes per element, (p+1)(p+2)/2.
    pub n_p: usize,
    /// Nodes per edge, p+1.
    pub n_fp: usize,
    /// Volume node coordinates in the unit triangle.
    pub nodes: Vec<[f64; 2]>,
    /// Edge node parameters in [0,1] (shared distribution for all edges).
    pub edge_nodes: Vec<f64>,
    /// 2-norm condition number of the generalized Vandermonde matrix.
    pub vandermonde_condition: f64,
    /// Volume quadrature points (unit triangle) and weights.
    pub quad_points: Vec<[f64; 2]>,
    pub quad_weights: Vec<f64>,
    /// Declared polynomial exactness of both quadrature rules.
    pub quad_degree: usize,
    /// Volume basis values at volume quadrature points, (nq x n_p).
    pub phi_quad: DMatrix<f64>,
    /// Volume basis x/y derivatives (unit-triangle coords) at quadrature
    /// points, (nq x n_p) each.
    pub dphi_quad: (DMatrix<f64>, DMatrix<f64>),
    /// Edge quadrature on [0,1].
    pub edge_quad_points: Vec<f64>,
    pub edge_quad_weights: Vec<f64>,
    /// Edge basis values at edge quadrature points, (neq x n_fp).
    pub edge_phi_quad: DMatrix<f64>,
    /// Edge mass matrix on [0,1], (n_fp x n_fp).
    pub edge_mass: DMatrix<f64>,
    /// Integrals of the edge basis functions over [0,1].
    pub edge_integrals: DVector<f64>,
    /// For each local face, indices of the volume nodes on that face,
    /// ordered along the face direction v_f -> v_{f+1}.
    pub fmask: [Vec<usize>; 3],
    modal_exponents: Vec<(usize, usize)>,
    v_inv: DMatrix<f64>,
}

/// Build the reference element of order `p` (1..=6).
pub fn build_reference_element(p: usize) -> Result<RefElement> {
    if !(MIN_ORDER..=MAX_ORDER).contains(&p) {
        return Err(Error::UnsupportedOrder(p));
    }
    let n_p = (p + 1) * (p + 2) / 2;
    let n_fp = p + 1;

    // node layout on the (ix, iy) lattice; fmask is combinatorial so it
    // survives the warp below
    let mut lattice = Vec::with_capacity(n_p);
    for iy in 0..=p {
        for ix in 0..=(p - iy) {
            lattice.push((ix, iy));
        }
    }
    let nodes: Vec<[f64; 2]> = if p <= 3 {
        lattice
            .iter()
            .map(|&(ix, iy)| [ix as f64 / p as f64, iy as f64 / p as f64])
            .collect()
    } else {
        warp_blend_nodes(p, &lattice)
    };
    let edge_nodes: Vec<f64> = if p <= 3 {
        (0..=p).map(|i| i as f64 / p as f64).collect()
    } else {
        gauss_lobatto(p).iter().map(|x| 0.5 * (x + 1.0)).collect()
    };

    let mut fmask: [Vec<usize>; 3] = Default::default();
    for (idx, &(ix, iy)) in lattice.iter().enumerate() {
        if iy == 0 {
            fmask[0].push(idx); // v0 -> v1, ix increasing: lattice order
        }
        if ix + iy == p {
            fmask[1].push(idx); // v1 -> v2, iy increasing: lattice order
        }
        if ix == 0 {
            fmask[2].push(idx); // v2 -> v0, iy decreasing: reverse later
        }
    }
    fmask[2].reverse();

    let modal_exponents: Vec<(usize, usize)> = {
        let mut v = Vec::with_capacity(n_p);
        for i in 0..=p {
            for j in 0..=(p - i) {
                v.push((i, j));
            }
        }
        v
    };

    let v = modal_matrix(&modal_exponents, &nodes);
    let svd = v.clone().svd(false, false);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if smin <= 0.0 || !smin.is_finite() {
        return Err(Error::InvalidGeometry(format!(
            "singular Vandermonde for order {p}"
        )));
    }
    let v_inv = v
        .lu()
        .try_inverse()
        .ok_or_else(|| Error::InvalidGeometry(format!("singular Vandermonde for order {p}")))?;

    // volume quadrature: collapsed (Duffy) tensor Gauss-Legendre;
    // n = p+2 points per direction integrates total degree 2p+2 exactly
    let quad_degree = 2 * p + 2;
    let n1 = p + 2;
    let (gx, gw) = gauss_legendre_01(n1);
    let mut quad_points = Vec::with_capacity(n1 * n1);
    let mut quad_weights = Vec::with_capacity(n1 * n1);
    for i in 0..n1 {
        for j in 0..n1 {
            quad_points.push([gx[i], gx[j] * (1.0 - gx[i])]);
            quad_weights.push(gw[i] * gw[j] * (1.0 - gx[i]));
        }
    }

    let edge_quad_points = gx.clone();
    let edge_quad_weights = gw.clone();

    let edge_phi_quad = DMatrix::from_fn(n1, n_fp, |q, i| {
        lagrange_1d(&edge_nodes, i, edge_quad_points[q])
    });
    let mut edge_mass = DMatrix::zeros(n_fp, n_fp);
    for q in 0..n1 {
        for i in 0..n_fp {
            for j in 0..n_fp {
                edge_mass[(i, j)] +=
                    edge_quad_weights[q] * edge_phi_quad[(q, i)] * edge_phi_quad[(q, j)];
            }
        }
    }
    let mut edge_integrals = DVector::zeros(n_fp);
    for q in 0..n1 {
        for i in 0..n_fp {
            edge_integrals[i] += edge_quad_weights[q] * edge_phi_quad[(q, i)];
        }
    }

    let mut elem = RefElement {
        p,
        n_p,
        n_fp,
        nodes,
        edge_nodes,
        vandermonde_condition: smax / smin,
        quad_points: quad_points.clone(),
        quad_weights,
        quad_degree,
        phi_quad: DMatrix::zeros(0, 0),
        dphi_quad: (DMatrix::zeros(0, 0), DMatrix::zeros(0, 0)),
        edge_quad_points,
        edge_quad_weights,
        edge_phi_quad,
        edge_mass,
        edge_integrals,
        fmask,
        modal_exponents,
        v_inv,
    };
    elem.phi_quad = elem.evaluate_basis_unchecked(&quad_points);
    elem.dphi_quad = elem.evaluate_basis_gradients_unchecked(&quad_points);
    Ok(elem)
}

impl RefElement {
    /// Evaluate all Lagrange basis functions at the given unit-triangle
    /// points; row q holds `l_i(points[q])`.
    ///
    /// Points must lie in (or numerically on) the reference triangle.
    pub fn evaluate_basis(&self, points: &[[f64; 2]]) -> Result<DMatrix<f64>> {
        self.check_points(points)?;
        Ok(self.evaluate_basis_unchecked(points))
    }

    /// Evaluate basis gradients (d/dx, d/dy in unit-triangle coordinates).
    pub fn evaluate_basis_gradients(
        &self,
        points: &[[f64; 2]],
    ) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
        self.check_points(points)?;
        Ok(self.evaluate_basis_gradients_unchecked(points))
    }

    fn check_points(&self, points: &[[f64; 2]]) -> Result<()> {
        const TOL: f64 = 1e-8;
        for &[x, y] in points {
            if x < -TOL || y < -TOL || x + y > 1.0 + TOL {
                return Err(Error::InvalidGeometry(format!(
                    "point ({x}, {y}) lies outside the reference triangle"
                )));
            }
        }
        Ok(())
    }

    fn evaluate_basis_unchecked(&self, points: &[[f64; 2]]) -> DMatrix<f64> {
        let modal = modal_matrix(&self.modal_exponents, points);
        modal * &self.v_inv
    }

    fn evaluate_basis_gradients_unchecked(
        &self,
        points: &[[f64; 2]],
    ) -> (DMatrix<f64>, DMatrix<f64>) {
        let (mr, ms) = modal_gradient_matrices(&self.modal_exponents, points);
        // chain rule for unit -> biunit map (r,s) = (2x-1, 2y-1)
        (2.0 * mr * &self.v_inv, 2.0 * ms * &self.v_inv)
    }
}

fn modal_matrix(exponents: &[(usize, usize)], points: &[[f64; 2]]) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(points.len(), exponents.len());
    for (q, &[x, y]) in points.iter().enumerate() {
        let (r, s) = (2.0 * x - 1.0, 2.0 * y - 1.0);
        for (k, &(i, j)) in exponents.iter().enumerate() {
            m[(q, k)] = koornwinder(i, j, r, s);
        }
    }
    m
}

fn modal_gradient_matrices(
    exponents: &[(usize, usize)],
    points: &[[f64; 2]],
) -> (DMatrix<f64>, DMatrix<f64>) {
    let mut mr = DMatrix::zeros(points.len(), exponents.len());
    let mut ms = DMatrix::zeros(points.len(), exponents.len());
    for (q, &[x, y]) in points.iter().enumerate() {
        let (r, s) = (2.0 * x - 1.0, 2.0 * y - 1.0);
        for (k, &(i, j)) in exponents.iter().enumerate() {
            let (dr, ds) = koornwinder_gradient(i, j, r, s);
            mr[(q, k)] = dr;
            ms[(q, k)] = ds;
        }
    }
    (mr, ms)
}

/// Orthonormal Koornwinder-Dubiner mode (i,j) on the biunit triangle
/// {r,s >= -1, r+s <= 0}.
fn koornwinder(i: usize, j: usize, r: f64, s: f64) -> f64 {
    let (a, b) = collapsed_coords(r, s);
    let h1 = jacobi_p(i, 0.0, 0.0, a);
    let h2 = jacobi_p(j, 2.0 * i as f64 + 1.0, 0.0, b);
    std::f64::consts::SQRT_2 * h1 * h2 * (1.0 - b).powi(i as i32)
}

fn koornwinder_gradient(i: usize, j: usize, r: f64, s: f64) -> (f64, f64) {
    let (a, b) = collapsed_coords(r, s);
    let fa = jacobi_p(i, 0.0, 0.0, a);
    let dfa = grad_jacobi_p(i, 0.0, 0.0, a);
    let gb = jacobi_p(j, 2.0 * i as f64 + 1.0, 0.0, b);
    let dgb = grad_jacobi_p(j, 2.0 * i as f64 + 1.0, 0.0, b);
    let half_1mb = 0.5 * (1.0 - b);

    let mut dmodedr = dfa * gb;
    if i > 0 {
        dmodedr *= half_1mb.powi(i as i32 - 1);
    }
    let mut dmodeds = dfa * gb * 0.5 * (1.0 + a);
    if i > 0 {
        dmodeds *= half_1mb.powi(i as i32 - 1);
    }
    let mut tmp = dgb * half_1mb.powi(i as i32);
    if i > 0 {
        tmp -= 0.5 * i as f64 * gb * half_1mb.powi(i as i32 - 1);
    }
    dmodeds += fa * tmp;

    let scale = 2f64.powf(i as f64 + 0.5);
    (scale * dmodedr, scale * dmodeds)
}

fn collapsed_coords(r: f64, s: f64) -> (f64, f64) {
    if (1.0 - s).abs() > 1e-12 {
        (2.0 * (1.0 + r) / (1.0 - s) - 1.0, s)
    } else {
        (-1.0, s)
    }
}

/// Normalized Jacobi polynomial P_n^{(alpha,beta)} (orthonormal on [-1,1]).
pub fn jacobi_p(n: usize, alpha: f64, beta: f64, x: f64) -> f64 {
    let ab = alpha + beta;
    let gamma0 = 2f64.powf(ab + 1.0) / (ab + 1.0) * gamma_fn(alpha + 1.0) * gamma_fn(beta + 1.0)
        / gamma_fn(ab + 1.0);
    let mut pl_prev = 1.0 / gamma0.sqrt();
    if n == 0 {
        return pl_prev;
    }
    let gamma1 = (alpha + 1.0) * (beta + 1.0) / (ab + 3.0) * gamma0;
    let mut pl = ((ab + 2.0) * x / 2.0 + (alpha - beta) / 2.0) / gamma1.sqrt();
    if n == 1 {
        return pl;
    }
    let mut aold = 2.0 / (2.0 + ab) * ((alpha + 1.0) * (beta + 1.0) / (ab + 3.0)).sqrt();
    for i in 1..n {
        let i = i as f64;
        let h1 = 2.0 * i + ab;
        let anew = 2.0 / (h1 + 2.0)
            * ((i + 1.0) * (i + 1.0 + ab) * (i + 1.0 + alpha) * (i + 1.0 + beta)
                / (h1 + 1.0)
                / (h1 + 3.0))
                .sqrt();
        let bnew = -(alpha * alpha - beta * beta) / h1 / (h1 + 2.0);
        let pl_next = (-aold * pl_prev + (x - bnew) * pl) / anew;
        pl_prev = pl;
        pl = pl_next;
        aold = anew;
    }
    pl
}

/// Derivative of the normalized Jacobi polynomial.
pub fn grad_jacobi_p(n: usize, alpha: f64, beta: f64, x: f64) -> f64 {
    if n == 0 {
        return 0.0;
    }
    (n as f64 * (n as f64 + alpha + beta + 1.0)).sqrt()
        * jacobi_p(n - 1, alpha + 1.0, beta + 1.0, x)
}

fn gamma_fn(x: f64) -> f64 {
    // arguments here are positive half-integers or integers; Lanczos is
    // plenty accurate for those
    const G: f64 = 7.0;
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_93,
        676.520_368_121_885_1,
        -1259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        std::f64::consts::PI / ((std::f64::consts::PI * x).sin() * gamma_fn(1.0 - x))
    } else {
        let x = x - 1.0;
        let mut a = COEF[0];
        let t = x + G + 0.5;
        for (i, &c) in COEF.iter().enumerate().skip(1) {
            a += c / (x + i as f64);
        }
        (2.0 * std::f64::consts::PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * a
    }
}

/// Gauss-Legendre rule with `n` points on [0,1].
pub fn gauss_legendre_01(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut xs = Vec::with_capacity(n);
    let mut ws = Vec::with_capacity(n);
    for k in 0..n {
        // Chebyshev initial guess, Newton on P_n
        let mut x = -(std::f64::consts::PI * (k as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_with_derivative(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_with_derivative(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        xs.push(0.5 * (x + 1.0));
        ws.push(0.5 * w);
    }
    (xs, ws)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Gauss-Lobatto points on [-1,1] for polynomial order `p` (p+1 points).
pub fn gauss_lobatto(p: usize) -> Vec<f64> {
    if p == 1 {
        return vec![-1.0, 1.0];
    }
    // interior points are the extrema of P_p: roots of P_p'
    let mut pts = vec![-1.0];
    for k in 1..p {
        let mut x = -(std::f64::consts::PI * k as f64 / p as f64).cos();
        for _ in 0..100 {
            let (pv, dp) = legendre_with_derivative(p, x);
            // (1-x^2) P'' = 2x P' - p(p+1) P
            let ddp = (2.0 * x * dp - p as f64 * (p as f64 + 1.0) * pv) / (1.0 - x * x);
            let dx = dp / ddp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        pts.push(x);
    }
    pts.push(1.0);
    pts
}

/// 1D Lagrange basis function `i` on the given nodes, evaluated at `t`.
pub fn lagrange_1d(nodes: &[f64], i: usize, t: f64) -> f64 {
    let mut v = 1.0;
    for (j, &xj) in nodes.iter().enumerate() {
        if j != i {
            v *= (t - xj) / (nodes[i] - xj);
        }
    }
    v
}

/// Warp-and-blend node set for p >= 4, indexed by the equidistant lattice.
fn warp_blend_nodes(p: usize, lattice: &[(usize, usize)]) -> Vec<[f64; 2]> {
    // blend optimization constants for orders 1..=6
    const ALPHA: [f64; 7] = [0.0, 0.0, 0.0, 1.4152, 0.1001, 0.2751, 0.9800];
    let alpha = ALPHA[p];
    let n = p as f64;

    let lgl = gauss_lobatto(p);
    let req: Vec<f64> = (0..=p).map(|i| -1.0 + 2.0 * i as f64 / n).collect();
    let warp_shift: Vec<f64> = (0..=p).map(|i| lgl[i] - req[i]).collect();
    // interpolation from equidistant 1D nodes, via normalized Legendre
    let veq = DMatrix::from_fn(p + 1, p + 1, |r, c| jacobi_p(c, 0.0, 0.0, req[r]));
    let veq_t_lu = veq.transpose().lu();
    let warpfactor = |r: f64| -> f64 {
        let pvec = DVector::from_fn(p + 1, |i, _| jacobi_p(i, 0.0, 0.0, r));
        let lcoef = veq_t_lu.solve(&pvec).expect("equidistant Vandermonde");
        let mut w = 0.0;
        for i in 0..=p {
            w += lcoef[i] * warp_shift[i];
        }
        if r.abs() < 1.0 - 1e-10 {
            w / (1.0 - r * r)
        } else {
            0.0
        }
    };

    let sqrt3 = 3f64.sqrt();
    let (c23, s23) = ((2.0 * std::f64::consts::PI / 3.0).cos(), (2.0 * std::f64::consts::PI / 3.0).sin());
    let (c43, s43) = ((4.0 * std::f64::consts::PI / 3.0).cos(), (4.0 * std::f64::consts::PI / 3.0).sin());

    lattice
        .iter()
        .map(|&(ix, iy)| {
            // barycentric coordinates of the equidistant node
            let l1 = iy as f64 / n; // vertex (0,1)
            let l3 = ix as f64 / n; // vertex (1,0)
            let l2 = 1.0 - l1 - l3; // vertex (0,0)
            // equilateral-frame position
            let mut x = -l2 + l3;
            let mut y = (-l2 - l3 + 2.0 * l1) / sqrt3;
            let blend = [4.0 * l2 * l3, 4.0 * l1 * l3, 4.0 * l1 * l2];
            let warps = [
                warpfactor(l3 - l2) * (1.0 + (alpha * l1).powi(2)),
                warpfactor(l1 - l3) * (1.0 + (alpha * l2).powi(2)),
                warpfactor(l2 - l1) * (1.0 + (alpha * l3).powi(2)),
            ];
            x += blend[0] * warps[0] + c23 * blend[1] * warps[1] + c43 * blend[2] * warps[2];
            y += s23 * blend[1] * warps[1] + s43 * blend[2] * warps[2];
            // equilateral -> barycentric -> unit triangle
            let b1 = (sqrt3 * y + 1.0) / 3.0;
            let b2 = (-3.0 * x - sqrt3 * y + 2.0) / 6.0;
            let b3 = (3.0 * x - sqrt3 * y + 2.0) / 6.0;
            debug_assert!((b1 + b2 + b3 - 1.0).abs() < 1e-12);
            [b3, b1] // x-coord from vertex (1,0), y-coord from vertex (0,1)
        })
        .collect()
}

/// Exact integral of x^a y^b over the unit triangle: a! b! / (a+b+2)!.
/// Used as an oracle in tests and for quadrature verification.
pub fn monomial_integral_unit_triangle(a: u32, b: u32) -> f64 {
    let mut num = 1.0f64;
    // a! b! / (a+b+2)! computed as a product to avoid overflow
    let mut denom = 1.0f64;
    for i in 1..=a {
        num *= i as f64;
    }
    for i in 1..=b {
        num *= i as f64;
    }
    for i in 1..=(a + b + 2) {
        denom *= i as f64;
    }
    num / denom
}
