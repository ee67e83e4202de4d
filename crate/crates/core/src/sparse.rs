//! Minimal sparse linear algebra: triplet assembly, CSR storage, exact
//! minimum-degree ordering and an up-looking sparse Cholesky factorization.
//!
//! Everything here is deterministic: ties in the ordering break on the
//! lowest node index and assembly sums duplicates in sorted order, so
//! repeated factorizations of the same system are bitwise identical.

use crate::error::{Error, Result};

/// Triplet (COO) accumulator for building a sparse matrix.
#[derive(Debug, Clone)]
pub struct Triplets {
    n: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl Triplets {
    pub fn new(n: usize) -> Self {
        Triplets {
            n,
            entries: Vec::new(),
        }
    }

    pub fn push(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(i < self.n && j < self.n);
        if v != 0.0 {
            self.entries.push((i, j, v));
        }
    }

    /// Compress to CSR, summing duplicate entries.
    pub fn to_csr(&self) -> Csr {
        let mut entries = self.entries.clone();
        entries.sort_by_key(|&(i, j, _)| (i, j));
        let mut row_ptr = vec![0usize; self.n + 1];
        let mut col_idx = Vec::new();
        let mut vals = Vec::new();
        let mut last: Option<(usize, usize)> = None;
        for &(i, j, v) in &entries {
            if last == Some((i, j)) {
                *vals.last_mut().unwrap() += v;
            } else {
                col_idx.push(j);
                vals.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..self.n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Csr {
            n: self.n,
            row_ptr,
            col_idx,
            vals,
        }
    }
}

/// Square sparse matrix in compressed sparse row form.
#[derive(Debug, Clone)]
pub struct Csr {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub vals: Vec<f64>,
}

impl Csr {
    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let lo = self.row_ptr[i];
        let hi = self.row_ptr[i + 1];
        match self.col_idx[lo..hi].binary_search(&j) {
            Ok(k) => self.vals[lo + k],
            Err(_) => 0.0,
        }
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n);
        for i in 0..self.n {
            let mut s = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.vals[k] * x[self.col_idx[k]];
            }
            y[i] = s;
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.vals.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Largest |a_ij - a_ji| over all entries.
    pub fn symmetry_error(&self) -> f64 {
        let mut err = 0.0f64;
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.col_idx[k];
                err = err.max((self.vals[k] - self.get(j, i)).abs());
            }
        }
        err
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    /// Dense copy, for small oracle comparisons.
    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let mut m = nalgebra::DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                m[(i, self.col_idx[k])] = self.vals[k];
            }
        }
        m
    }
}

/// Fill-reducing elimination order by exact minimum degree on the quotient
/// graph. Returns `perm` with `perm[k]` = original index eliminated at
/// step k.
pub fn min_degree_ordering(a: &Csr) -> Vec<usize> {
    use std::cmp::Reverse;
    use std::collections::BinaryHeap;

    let n = a.n;
    if n == 0 {
        return Vec::new();
    }
    // strict adjacency from the symmetric pattern
    let mut adj_var: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        for k in a.row_ptr[i]..a.row_ptr[i + 1] {
            let j = a.col_idx[k];
            if j != i {
                adj_var[i].push(j);
                adj_var[j].push(i);
            }
        }
    }
    for l in adj_var.iter_mut() {
        l.sort_unstable();
        l.dedup();
    }

    let mut adj_elem: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut elem_bound: Vec<Vec<usize>> = Vec::new();
    let mut elem_alive: Vec<bool> = Vec::new();
    let mut eliminated = vec![false; n];
    let mut stamp = vec![usize::MAX; n];
    let mut stamp_val = 0usize;

    // exact external degree of a live variable
    let degree = |v: usize,
                  adj_var: &[Vec<usize>],
                  adj_elem: &[Vec<usize>],
                  elem_bound: &[Vec<usize>],
                  elem_alive: &[bool],
                  eliminated: &[bool],
                  stamp: &mut [usize],
                  stamp_val: &mut usize| {
        *stamp_val += 1;
        let s = *stamp_val;
        stamp[v] = s;
        let mut d = 0usize;
        for &u in &adj_var[v] {
            if !eliminated[u] && stamp[u] != s {
                stamp[u] = s;
                d += 1;
            }
        }
        for &e in &adj_elem[v] {
            if elem_alive[e] {
                for &u in &elem_bound[e] {
                    if !eliminated[u] && stamp[u] != s {
                        stamp[u] = s;
                        d += 1;
                    }
                }
            }
        }
        d
    };

    let mut cur_deg = vec![0usize; n];
    let mut heap = BinaryHeap::with_capacity(2 * n);
    for v in 0..n {
        cur_deg[v] = adj_var[v].len();
        heap.push(Reverse((cur_deg[v], v)));
    }

    let mut perm = Vec::with_capacity(n);
    while perm.len() < n {
        let Reverse((d, p)) = heap.pop().expect("heap exhausted before ordering finished");
        if eliminated[p] || d != cur_deg[p] {
            continue;
        }
        eliminated[p] = true;
        perm.push(p);

        // boundary of the new element: all live neighbors of p
        stamp_val += 1;
        let s = stamp_val;
        stamp[p] = s;
        let mut bound = Vec::new();
        for &u in &adj_var[p] {
            if !eliminated[u] && stamp[u] != s {
                stamp[u] = s;
                bound.push(u);
            }
        }
        for &e in &adj_elem[p] {
            if elem_alive[e] {
                for &u in &elem_bound[e] {
                    if !eliminated[u] && stamp[u] != s {
                        stamp[u] = s;
                        bound.push(u);
                    }
                }
                elem_alive[e] = false; // absorbed into the new element
            }
        }
        bound.sort_unstable();

        let e_new = elem_bound.len();
        for &v in &bound {
            adj_elem[v].retain(|&e| elem_alive[e]);
            adj_elem[v].push(e_new);
            // neighbors covered by the new element need no explicit edge
            adj_var[v].retain(|&u| !eliminated[u] && stamp[u] != s);
        }
        elem_bound.push(bound.clone());
        elem_alive.push(true);

        for &v in &bound {
            cur_deg[v] = degree(
                v,
                &adj_var,
                &adj_elem,
                &elem_bound,
                &elem_alive,
                &eliminated,
                &mut stamp,
                &mut stamp_val,
            );
            heap.push(Reverse((cur_deg[v], v)));
        }
    }
    perm
}

/// Sparse Cholesky factor A = P L Lᵀ Pᵀ with L stored by rows.
#[derive(Debug, Clone)]
pub struct CholeskyFactor {
    pub n: usize,
    /// perm[k] = original index of the k-th eliminated unknown.
    pub perm: Vec<usize>,
    lp: Vec<usize>,
    li: Vec<usize>,
    lx: Vec<f64>,
}

/// Factor a symmetric positive definite CSR matrix. `perm` is the
/// elimination order (as from [`min_degree_ordering`]).
pub fn cholesky(a: &Csr, perm: &[usize]) -> Result<CholeskyFactor> {
    let n = a.n;
    assert_eq!(perm.len(), n);
    let mut perm_inv = vec![0usize; n];
    for (k, &p) in perm.iter().enumerate() {
        perm_inv[p] = k;
    }

    // lower triangle of the permuted matrix, rows sorted by column
    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for i in 0..n {
        let pi = perm_inv[i];
        for k in a.row_ptr[i]..a.row_ptr[i + 1] {
            let pj = perm_inv[a.col_idx[k]];
            if pj <= pi {
                rows[pi].push((pj, a.vals[k]));
            }
        }
    }
    for r in rows.iter_mut() {
        r.sort_unstable_by_key(|&(j, _)| j);
    }

    // elimination tree (Liu's algorithm with path compression)
    let mut parent = vec![usize::MAX; n];
    let mut ancestor = vec![usize::MAX; n];
    for k in 0..n {
        for &(j, _) in &rows[k] {
            let mut j = j;
            while j != usize::MAX && j < k {
                let next = ancestor[j];
                ancestor[j] = k;
                if next == usize::MAX {
                    parent[j] = k;
                }
                j = next;
            }
        }
    }

    let mut lp = vec![0usize];
    let mut li: Vec<usize> = Vec::new();
    let mut lx: Vec<f64> = Vec::new();
    // row start offsets for column lookups during the triangular solves
    let mut x = vec![0.0f64; n];
    let mut mark = vec![usize::MAX; n];
    let mut pattern: Vec<usize> = Vec::new();

    for k in 0..n {
        // reach of row k in the etree gives the pattern of L(k, 0..k)
        pattern.clear();
        let mut akk = 0.0;
        for &(j, v) in &rows[k] {
            if j == k {
                akk = v;
                continue;
            }
            let mut j = j;
            while j < k && mark[j] != k {
                mark[j] = k;
                pattern.push(j);
                x[j] = 0.0;
                j = parent[j];
            }
        }
        pattern.sort_unstable();
        for &(j, v) in &rows[k] {
            if j < k {
                x[j] = v;
            }
        }

        // solve L(0..k,0..k) y = A(0..k,k) restricted to the pattern
        let mut diag_sum = 0.0;
        for &j in &pattern {
            let mut s = x[j];
            let mut ljj = 0.0;
            for idx in lp[j]..lp[j + 1] {
                let c = li[idx];
                if c == j {
                    ljj = lx[idx];
                } else if mark[c] == k {
                    s -= lx[idx] * x[c];
                }
            }
            let lkj = s / ljj;
            x[j] = lkj;
            diag_sum += lkj * lkj;
        }

        let d = akk - diag_sum;
        if !(d > 0.0) || !d.is_finite() {
            return Err(Error::NotSpd(format!(
                "nonpositive pivot {d:.3e} at elimination step {k}"
            )));
        }
        for &j in &pattern {
            li.push(j);
            lx.push(x[j]);
        }
        li.push(k);
        lx.push(d.sqrt());
        lp.push(li.len());
    }

    Ok(CholeskyFactor {
        n,
        perm: perm.to_vec(),
        lp,
        li,
        lx,
    })
}

impl CholeskyFactor {
    pub fn nnz_l(&self) -> usize {
        self.lx.len()
    }

    /// Solve A x = b.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        debug_assert_eq!(b.len(), n);
        let mut y = vec![0.0f64; n];
        for k in 0..n {
            y[k] = b[self.perm[k]];
        }
        // forward: L y' = y, rows ascending (diagonal entry is last in row)
        for k in 0..n {
            let mut s = y[k];
            let (lo, hi) = (self.lp[k], self.lp[k + 1]);
            for idx in lo..hi - 1 {
                s -= self.lx[idx] * y[self.li[idx]];
            }
            y[k] = s / self.lx[hi - 1];
        }
        // backward: Lᵀ x' = y', columns of Lᵀ are rows of L
        for k in (0..n).rev() {
            let (lo, hi) = (self.lp[k], self.lp[k + 1]);
            let xk = y[k] / self.lx[hi - 1];
            y[k] = xk;
            for idx in lo..hi - 1 {
                y[self.li[idx]] -= self.lx[idx] * xk;
            }
        }
        let mut x = vec![0.0f64; n];
        for k in 0..n {
            x[self.perm[k]] = y[k];
        }
        x
    }
}

/// Jacobi-preconditioned conjugate gradients. Returns `(x, iterations)` or
/// an error on breakdown / iteration cap.
pub fn pcg(a: &Csr, b: &[f64], rtol: f64, max_iter: usize) -> Result<(Vec<f64>, usize)> {
    let n = a.n;
    let bnorm = norm2(b);
    if bnorm == 0.0 {
        return Ok((vec![0.0; n], 0));
    }
    let diag = a.diagonal();
    for (i, &d) in diag.iter().enumerate() {
        if !(d > 0.0) {
            return Err(Error::NotSpd(format!(
                "nonpositive diagonal entry {d:.3e} at row {i}"
            )));
        }
    }
    let mut x = vec![0.0f64; n];
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&diag).map(|(ri, di)| ri / di).collect();
    let mut p = z.clone();
    let mut rz: f64 = dot(&r, &z);
    let mut ap = vec![0.0f64; n];
    for it in 1..=max_iter {
        a.matvec(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::NotSpd(format!(
                "conjugate-gradient breakdown, pᵀAp = {pap:.3e}"
            )));
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        if norm2(&r) <= rtol * bnorm {
            return Ok((x, it));
        }
        for i in 0..n {
            z[i] = r[i] / diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::NotSpd(format!(
        "conjugate gradients did not converge in {max_iter} iterations"
    )))
}

pub fn norm2(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_spd(n: usize, seed: u64) -> Csr {
        // AᵀA + n·I from a deterministic xorshift stream
        let mut state = seed.max(1);
        let mut next = || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state as f64 / u64::MAX as f64) - 0.5
        };
        let m = nalgebra::DMatrix::from_fn(n, n, |_, _| next());
        let spd = m.transpose() * &m + nalgebra::DMatrix::identity(n, n) * n as f64;
        let mut t = Triplets::new(n);
        for i in 0..n {
            for j in 0..n {
                t.push(i, j, spd[(i, j)]);
            }
        }
        t.to_csr()
    }

    fn laplacian_1d(n: usize) -> Csr {
        let mut t = Triplets::new(n);
        for i in 0..n {
            t.push(i, i, 2.0);
            if i + 1 < n {
                t.push(i, i + 1, -1.0);
                t.push(i + 1, i, -1.0);
            }
        }
        t.to_csr()
    }

    #[test]
    fn triplets_sum_duplicates() {
        let mut t = Triplets::new(3);
        t.push(0, 1, 2.0);
        t.push(0, 1, 3.0);
        t.push(2, 2, 1.0);
        t.push(0, 0, 4.0);
        let a = t.to_csr();
        assert_eq!(a.nnz(), 3);
        assert_eq!(a.get(0, 1), 5.0);
        assert_eq!(a.get(0, 0), 4.0);
        assert_eq!(a.get(2, 2), 1.0);
        assert_eq!(a.get(1, 1), 0.0);
    }

    #[test]
    fn matvec_matches_dense() {
        let a = random_spd(12, 7);
        let d = a.to_dense();
        let x: Vec<f64> = (0..12).map(|i| (i as f64).sin()).collect();
        let mut y = vec![0.0; 12];
        a.matvec(&x, &mut y);
        let yd = d * nalgebra::DVector::from_column_slice(&x);
        for i in 0..12 {
            assert!((y[i] - yd[i]).abs() < 1e-12 * yd[i].abs().max(1.0));
        }
    }

    #[test]
    fn symmetry_error_detects_asymmetry() {
        let mut t = Triplets::new(2);
        t.push(0, 1, 1.0);
        t.push(1, 0, 1.0 + 1e-6);
        let a = t.to_csr();
        assert!((a.symmetry_error() - 1e-6).abs() < 1e-12);
    }

    #[test]
    fn identity_solve_returns_rhs() {
        let mut t = Triplets::new(4);
        for i in 0..4 {
            t.push(i, i, 1.0);
        }
        let a = t.to_csr();
        let f = cholesky(&a, &min_degree_ordering(&a)).unwrap();
        let e1 = vec![1.0, 0.0, 0.0, 0.0];
        let x = f.solve(&e1);
        assert_eq!(x, e1);
    }

    #[test]
    fn cholesky_matches_dense_oracle() {
        let a = random_spd(50, 42);
        let d = a.to_dense();
        let b: Vec<f64> = (0..50).map(|i| (i as f64 * 0.37).cos()).collect();
        let perm = min_degree_ordering(&a);
        let f = cholesky(&a, &perm).unwrap();
        let x = f.solve(&b);
        let xd = d
            .clone()
            .cholesky()
            .unwrap()
            .solve(&nalgebra::DVector::from_column_slice(&b));
        let scale = xd.amax();
        for i in 0..50 {
            assert!((x[i] - xd[i]).abs() < 1e-10 * scale, "entry {i}");
        }
    }

    #[test]
    fn cholesky_residual_small_on_sparse_problem() {
        let a = laplacian_1d(200);
        let b: Vec<f64> = (0..200).map(|i| (i as f64 * 0.11).sin()).collect();
        let f = cholesky(&a, &min_degree_ordering(&a)).unwrap();
        let x = f.solve(&b);
        let mut ax = vec![0.0; 200];
        a.matvec(&x, &mut ax);
        let res: f64 = ax.iter().zip(&b).map(|(u, v)| (u - v) * (u - v)).sum::<f64>().sqrt();
        assert!(res < 1e-10 * norm2(&b));
    }

    #[test]
    fn indefinite_matrix_rejected() {
        let mut t = Triplets::new(2);
        t.push(0, 0, 1.0);
        t.push(1, 1, -1.0);
        let a = t.to_csr();
        assert!(matches!(
            cholesky(&a, &[0, 1]),
            Err(Error::NotSpd(_))
        ));
    }

    #[test]
    fn min_degree_is_permutation_and_reduces_fill() {
        // arrow matrix: natural order fills completely, minimum degree
        // eliminates the hub last and keeps L as sparse as A
        let n = 30;
        let mut t = Triplets::new(n);
        for i in 0..n {
            t.push(i, i, 10.0);
        }
        for i in 1..n {
            t.push(0, i, 1.0);
            t.push(i, 0, 1.0);
        }
        let a = t.to_csr();
        let perm = min_degree_ordering(&a);
        let mut seen = vec![false; n];
        for &p in &perm {
            assert!(!seen[p]);
            seen[p] = true;
        }
        // the hub is only eliminated once its degree has collapsed
        let hub_pos = perm.iter().position(|&p| p == 0).unwrap();
        assert!(hub_pos >= n - 2);
        let f = cholesky(&a, &perm).unwrap();
        let natural: Vec<usize> = (0..n).collect();
        let f_nat = cholesky(&a, &natural).unwrap();
        assert!(f.nnz_l() < f_nat.nnz_l());
        assert_eq!(f.nnz_l(), 2 * n - 1);
    }

    #[test]
    fn ordered_and_natural_factorizations_agree() {
        let a = random_spd(40, 3);
        let b: Vec<f64> = (0..40).map(|i| 1.0 / (i as f64 + 1.0)).collect();
        let x1 = cholesky(&a, &min_degree_ordering(&a)).unwrap().solve(&b);
        let natural: Vec<usize> = (0..40).collect();
        let x2 = cholesky(&a, &natural).unwrap().solve(&b);
        for i in 0..40 {
            assert!((x1[i] - x2[i]).abs() < 1e-11);
        }
    }

    #[test]
    fn solve_is_deterministic() {
        let a = laplacian_1d(73);
        let b: Vec<f64> = (0..73).map(|i| (i as f64).cos()).collect();
        let run = || {
            let perm = min_degree_ordering(&a);
            cholesky(&a, &perm).unwrap().solve(&b)
        };
        let x1 = run();
        let x2 = run();
        assert_eq!(x1, x2, "direct path must be bitwise reproducible");
    }

    #[test]
    fn pcg_matches_direct() {
        let a = laplacian_1d(120);
        let b: Vec<f64> = (0..120).map(|i| ((i % 7) as f64) - 3.0).collect();
        let xd = cholesky(&a, &min_degree_ordering(&a)).unwrap().solve(&b);
        let (xi, iters) = pcg(&a, &b, 1e-12, 5000).unwrap();
        assert!(iters > 0);
        for i in 0..120 {
            assert!((xd[i] - xi[i]).abs() < 1e-7 * norm2(&xd));
        }
    }

    #[test]
    fn pcg_rejects_indefinite() {
        let mut t = Triplets::new(2);
        t.push(0, 0, 1.0);
        t.push(1, 1, -1.0);
        let a = t.to_csr();
        assert!(pcg(&a, &[1.0, 1.0], 1e-10, 100).is_err());
    }
}
