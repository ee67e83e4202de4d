//! Solution of the condensed global system: sparse Cholesky with a
//! minimum-degree ordering, conjugate-gradient fallback, and a spectral
//! condition-number estimate.

use crate::assembly::GlobalTraceSystem;
use crate::error::{Error, Result};
use crate::sparse::{cholesky, dot, min_degree_ordering, norm2, pcg, CholeskyFactor, Csr};

/// Relative residual required of any accepted solution.
pub const SOLVE_RTOL: f64 = 1e-10;

/// Relative symmetry tolerance demanded of the input matrix.
pub const SYMMETRY_RTOL: f64 = 1e-10;

/// Relative tolerance of the eigenvalue iterations in
/// [`condition_estimate`].
pub const EIG_RTOL: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMethod {
    Cholesky,
    ConjugateGradient,
}

impl std::fmt::Display for SolveMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SolveMethod::Cholesky => write!(f, "cholesky"),
            SolveMethod::ConjugateGradient => write!(f, "pcg"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub method: SolveMethod,
    /// Iteration count; 0 for the direct path.
    pub iterations: usize,
    pub relative_residual: f64,
    /// Nonzeros in the Cholesky factor, when the direct path succeeded.
    pub factor_nnz: Option<usize>,
}

fn relative_residual(a: &Csr, x: &[f64], b: &[f64]) -> f64 {
    let mut ax = vec![0.0; a.n];
    a.matvec(x, &mut ax);
    let mut r2 = 0.0;
    for i in 0..a.n {
        r2 += (ax[i] - b[i]) * (ax[i] - b[i]);
    }
    let bnorm = norm2(b);
    if bnorm == 0.0 {
        r2.sqrt()
    } else {
        r2.sqrt() / bnorm
    }
}

/// Solve the SPD trace system to relative residual 1e-10. The direct
/// sparse Cholesky path is tried first; preconditioned conjugate gradients
/// (Jacobi, at most 50 sqrt(N) iterations) serve as fallback.
pub fn solve_spd(sys: &GlobalTraceSystem) -> Result<(Vec<f64>, SolveReport)> {
    let a = &sys.matrix;
    let scale = a.max_abs();
    if scale > 0.0 && a.symmetry_error() > SYMMETRY_RTOL * scale {
        return Err(Error::NotSpd(format!(
            "matrix asymmetry {:.3e} exceeds {SYMMETRY_RTOL:.0e} relative",
            a.symmetry_error() / scale
        )));
    }
    let direct = min_degree_ordering(a);
    match cholesky(a, &direct) {
        Ok(f) => {
            let x = f.solve(&sys.rhs);
            let res = relative_residual(a, &x, &sys.rhs);
            if res <= SOLVE_RTOL {
                return Ok((
                    x,
                    SolveReport {
                        method: SolveMethod::Cholesky,
                        iterations: 0,
                        relative_residual: res,
                        factor_nnz: Some(f.nnz_l()),
                    },
                ));
            }
        }
        Err(Error::NotSpd(_)) => {}
        Err(e) => return Err(e),
    }
    let max_iter = (50.0 * (sys.n_dof as f64).sqrt()).ceil() as usize;
    let (x, iters) = pcg(a, &sys.rhs, SOLVE_RTOL, max_iter.max(10))?;
    let res = relative_residual(a, &x, &sys.rhs);
    Ok((
        x,
        SolveReport {
            method: SolveMethod::ConjugateGradient,
            iterations: iters,
            relative_residual: res,
            factor_nnz: None,
        },
    ))
}

#[derive(Debug, Clone)]
pub struct ConditionEstimate {
    pub kappa: f64,
    pub lambda_max: f64,
    pub lambda_min: f64,
    /// False when either eigenvalue iteration hit its cap before reaching
    /// the 1e-3 relative tolerance; the estimate is still reported.
    pub converged: bool,
}

fn seeded_vector(n: usize) -> Vec<f64> {
    let mut state = 0x9e3779b97f4a7c15u64;
    (0..n)
        .map(|_| {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state as f64 / u64::MAX as f64) - 0.5
        })
        .collect()
}

fn rayleigh_iterate(
    mut apply: impl FnMut(&[f64]) -> Vec<f64>,
    n: usize,
    max_iter: usize,
) -> (f64, bool) {
    let mut x = seeded_vector(n);
    let nrm = norm2(&x);
    x.iter_mut().for_each(|v| *v /= nrm);
    let mut lambda = 0.0;
    for _ in 0..max_iter {
        let y = apply(&x);
        let new = dot(&x, &y);
        let ynorm = norm2(&y);
        if ynorm == 0.0 {
            return (0.0, true);
        }
        let converged = (new - lambda).abs() <= EIG_RTOL * new.abs().max(f64::MIN_POSITIVE);
        lambda = new;
        x = y;
        x.iter_mut().for_each(|v| *v /= ynorm);
        if converged {
            return (lambda, true);
        }
    }
    (lambda, false)
}

/// Estimate the spectral condition number: lambda_max by power iteration
/// on the matrix, lambda_min by inverse iteration through the Cholesky
/// factorization.
pub fn condition_estimate(sys: &GlobalTraceSystem) -> Result<ConditionEstimate> {
    let a = &sys.matrix;
    let n = sys.n_dof;
    if n == 0 {
        return Err(Error::NotSpd("empty system".into()));
    }
    let factor: CholeskyFactor = cholesky(a, &min_degree_ordering(a))?;
    let max_iter = 100 + 20 * (n as f64).sqrt().ceil() as usize;

    let (lmax, ok_max) = rayleigh_iterate(
        |x| {
            let mut y = vec![0.0; n];
            a.matvec(x, &mut y);
            y
        },
        n,
        max_iter,
    );
    let (inv_lmin, ok_min) = rayleigh_iterate(|x| factor.solve(x), n, max_iter);
    let lmin = 1.0 / inv_lmin;
    Ok(ConditionEstimate {
        kappa: lmax / lmin,
        lambda_max: lmax,
        lambda_min: lmin,
        converged: ok_max && ok_min,
    })
}
