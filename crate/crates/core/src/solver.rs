//! Sparse direct solution of the assembled system.

use std::time::Instant;

use faer::prelude::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::Mat;
use sprs::CsMat;

use crate::assembly::{DiscreteSolution, LinearSystem, Spaces};
use crate::error::{Error, Result};

const MAX_REFINEMENT: usize = 6;
const TOLERANCE: f64 = 1e-10;
/// Accepted in place of `TOLERANCE` when `||b||` is small against `||A|| ||x||`.
const BACKWARD_TOLERANCE: f64 = 1e-14;

#[derive(Clone, Debug, PartialEq)]
pub struct SolveReport {
    /// `||A x - b|| / ||b||` (absolute when `b = 0`).
    pub residual: f64,
    pub backward_error: f64,
    pub dim: usize,
    pub nnz: usize,
    pub refinement_steps: usize,
    pub seconds: f64,
}

fn residual(a: &CsMat<f64>, x: &[f64], b: &[f64]) -> Vec<f64> {
    let mut r = b.to_vec();
    for (v, (i, j)) in a.iter() {
        r[i] -= v * x[j];
    }
    r
}

/// `b - A x` with each row accumulated in double-double arithmetic.
fn accurate_residual(a: &CsMat<f64>, x: &[f64], b: &[f64]) -> Vec<f64> {
    let mut hi = b.to_vec();
    let mut lo = vec![0.0; b.len()];
    for (v, (i, j)) in a.iter() {
        let p = -v * x[j];
        let pe = (-v).mul_add(x[j], -p);
        let s = hi[i] + p;
        let z = s - hi[i];
        let e = (hi[i] - (s - z)) + (p - z);
        hi[i] = s;
        lo[i] += e + pe;
    }
    hi.iter().zip(&lo).map(|(h, l)| h + l).collect()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Normwise backward error `||A x - b||_inf / (||A||_inf ||x||_inf + ||b||_inf)`.
pub fn backward_error(a: &CsMat<f64>, x: &[f64], b: &[f64]) -> f64 {
    let inf = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let mut rows = vec![0.0; a.rows()];
    for (v, (i, _)) in a.iter() {
        rows[i] += v.abs();
    }
    let denom = inf(&rows) * inf(x) + inf(b);
    let r = inf(&residual(a, x, b));
    if denom > 0.0 {
        r / denom
    } else {
        r
    }
}

/// Relative residual `||A x - b|| / ||b||`.
pub fn relative_residual(a: &CsMat<f64>, x: &[f64], b: &[f64]) -> f64 {
    let r = norm(&residual(a, x, b));
    let nb = norm(b);
    if nb > 0.0 {
        r / nb
    } else {
        r
    }
}

/// Row and column scalings `r`, `c` such that `diag(r) A diag(c)` has rows
/// and columns of unit max norm (a few Ruiz sweeps).
fn equilibrate(a: &CsMat<f64>) -> (Vec<f64>, Vec<f64>) {
    let (m, n) = a.shape();
    let mut r = vec![1.0; m];
    let mut c = vec![1.0; n];
    for _ in 0..5 {
        let mut rmax = vec![0.0f64; m];
        let mut cmax = vec![0.0f64; n];
        for (v, (i, j)) in a.iter() {
            let s = (v * r[i] * c[j]).abs();
            rmax[i] = rmax[i].max(s);
            cmax[j] = cmax[j].max(s);
        }
        for (ri, mx) in r.iter_mut().zip(&rmax) {
            if *mx > 0.0 {
                *ri /= mx.sqrt();
            }
        }
        for (cj, mx) in c.iter_mut().zip(&cmax) {
            if *mx > 0.0 {
                *cj /= mx.sqrt();
            }
        }
    }
    (r, c)
}

/// Solves `A x = b` by sparse LU with partial pivoting on the equilibrated
/// matrix, followed by a few steps of iterative refinement.
pub fn solve_sparse(a: &CsMat<f64>, b: &[f64]) -> Result<(Vec<f64>, SolveReport)> {
    let start = Instant::now();
    let n = b.len();
    if a.rows() != n || a.cols() != n {
        return Err(Error::DimensionMismatch(format!(
            "matrix is {}x{}, right-hand side has {n} entries",
            a.rows(),
            a.cols()
        )));
    }
    if !a.data().iter().chain(b).all(|v| v.is_finite()) {
        return Err(Error::NonFinite);
    }
    if n == 0 {
        return Ok((
            Vec::new(),
            SolveReport {
                residual: 0.0,
                backward_error: 0.0,
                dim: 0,
                nnz: 0,
                refinement_steps: 0,
                seconds: 0.0,
            },
        ));
    }
    let (rs, cs) = equilibrate(a);
    let triplets: Vec<Triplet<usize, usize, f64>> = a
        .iter()
        .map(|(v, (i, j))| Triplet::new(i, j, v * rs[i] * cs[j]))
        .collect();
    let m = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &triplets)
        .map_err(|e| Error::SingularSystem(format!("{e:?}")))?;
    let lu = m
        .sp_lu()
        .map_err(|e| Error::SingularSystem(format!("factorization failed: {e:?}")))?;
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let inf = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let mut steps = 0;
    let mut last = f64::INFINITY;
    for it in 0..=MAX_REFINEMENT {
        let mut rhs = Mat::<f64>::from_fn(n, 1, |i, _| r[i] * rs[i]);
        lu.solve_in_place(rhs.as_mut());
        let dx: Vec<f64> = (0..n).map(|i| rhs[(i, 0)] * cs[i]).collect();
        let size = inf(&dx);
        if !size.is_finite() {
            return Err(Error::SingularSystem("solution is not finite".into()));
        }
        // A correction that fails to shrink carries only noise.
        if it > 0 && size >= 0.5 * last {
            break;
        }
        for (xi, d) in x.iter_mut().zip(&dx) {
            *xi += d;
        }
        steps = it;
        last = size;
        if size <= f64::EPSILON * inf(&x) {
            break;
        }
        r = accurate_residual(a, &x, b);
    }
    let residual = relative_residual(a, &x, b);
    let backward = backward_error(a, &x, b);
    if !(residual <= TOLERANCE || backward <= BACKWARD_TOLERANCE) {
        return Err(Error::SingularSystem(format!(
            "relative residual {residual:.3e} and backward error {backward:.3e} after factorization"
        )));
    }
    Ok((
        x,
        SolveReport {
            residual,
            backward_error: backward,
            dim: n,
            nnz: a.nnz(),
            refinement_steps: steps,
            seconds: start.elapsed().as_secs_f64(),
        },
    ))
}

/// Solves the coupled system. Problems without any essential pressure data
/// determine the pressures only up to a constant and are rejected.
pub fn solve(system: &LinearSystem, spaces: &Spaces) -> Result<(DiscreteSolution, SolveReport)> {
    if !spaces.s.prolongation.has_fixed() && !spaces.w.prolongation.has_fixed() {
        return Err(Error::SingularSystem(
            "no Dirichlet data: pressure is only determined up to a constant".into(),
        ));
    }
    let (x, report) = solve_sparse(&system.matrix, &system.rhs)?;
    Ok((DiscreteSolution::from_vector(spaces, &x), report))
}
