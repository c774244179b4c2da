//! Linear solvers for the constrained systems and matrix-weighted norms.

use std::time::Instant;

use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::Mat;

use crate::sparse::{dot, norm2, CsrMatrix};
use crate::{Error, Result};

pub const DEFAULT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveReport {
    /// Krylov iterations, or `None` for a direct factorisation.
    pub iterations: Option<usize>,
    /// `||b - A x||_2 / ||b||_2` (zero when `b = 0`).
    pub relative_residual: f64,
    pub seconds: f64,
}

fn relative_residual(a: &CsrMatrix, x: &[f64], b: &[f64]) -> (Vec<f64>, f64) {
    let ax = a.mul_vec(x);
    let r: Vec<f64> = b.iter().zip(&ax).map(|(b, ax)| b - ax).collect();
    let nb = norm2(b);
    let rel = if nb > 0.0 { norm2(&r) / nb } else { norm2(&r) };
    (r, rel)
}

fn check_square(a: &CsrMatrix, b: &[f64]) -> Result<()> {
    if a.nrows() != a.ncols() || a.nrows() != b.len() {
        return Err(Error::InvalidInput(format!(
            "system of size {}x{} with right-hand side of length {}",
            a.nrows(),
            a.ncols(),
            b.len()
        )));
    }
    Ok(())
}

/// Jacobi-preconditioned conjugate gradients with an iteration cap of `10 n`.
///
/// Convergence of the recursive residual is confirmed against the true
/// residual; if they disagree the iteration restarts from the current iterate.
/// A restart that fails to halve the true residual means the tolerance is
/// below what round-off allows, and the solve stops with `NotConverged`.
pub fn solve_spd(a: &CsrMatrix, b: &[f64], tol: f64) -> Result<(Vec<f64>, SolveReport)> {
    check_square(a, b)?;
    let start = Instant::now();
    let n = b.len();
    let nb = norm2(b);
    let mut x = vec![0.0; n];
    if nb == 0.0 {
        return Ok((
            x,
            SolveReport {
                iterations: Some(0),
                relative_residual: 0.0,
                seconds: 0.0,
            },
        ));
    }
    let diag = a.diagonal();
    if let Some(i) = diag.iter().position(|&d| !(d > 0.0)) {
        return Err(Error::NotPositiveDefinite(format!(
            "diagonal entry {i} is {}",
            diag[i]
        )));
    }
    let inv_diag: Vec<f64> = diag.iter().map(|d| 1.0 / d).collect();
    let cap = 10 * n.max(1);
    let mut iterations = 0;
    let mut r = b.to_vec();
    let mut last_restart = f64::INFINITY;
    loop {
        let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(r, d)| r * d).collect();
        let mut p = z.clone();
        let mut rz = dot(&r, &z);
        while norm2(&r) > tol * nb {
            if iterations >= cap {
                let (_, rel) = relative_residual(a, &x, b);
                return Err(Error::NotConverged {
                    iterations,
                    residual: rel,
                });
            }
            iterations += 1;
            let ap = a.mul_vec(&p);
            let pap = dot(&p, &ap);
            if !(pap > 0.0) {
                return Err(Error::NotPositiveDefinite(format!(
                    "conjugate gradient breakdown, p^T A p = {pap:e}"
                )));
            }
            let alpha = rz / pap;
            for i in 0..n {
                x[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
            }
            for i in 0..n {
                z[i] = r[i] * inv_diag[i];
            }
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            for i in 0..n {
                p[i] = z[i] + beta * p[i];
            }
        }
        let (true_r, rel) = relative_residual(a, &x, b);
        if rel <= tol {
            return Ok((
                x,
                SolveReport {
                    iterations: Some(iterations),
                    relative_residual: rel,
                    seconds: start.elapsed().as_secs_f64(),
                },
            ));
        }
        if iterations >= cap || rel > 0.5 * last_restart {
            return Err(Error::NotConverged {
                iterations,
                residual: rel,
            });
        }
        last_restart = rel;
        r = true_r;
    }
}

/// Sparse LU factorisation followed by a few steps of iterative refinement.
pub fn solve_general(a: &CsrMatrix, b: &[f64], tol: f64) -> Result<(Vec<f64>, SolveReport)> {
    check_square(a, b)?;
    let start = Instant::now();
    let n = b.len();
    if n == 0 || norm2(b) == 0.0 {
        return Ok((
            vec![0.0; n],
            SolveReport {
                iterations: None,
                relative_residual: 0.0,
                seconds: 0.0,
            },
        ));
    }
    let triplets: Vec<Triplet<usize, usize, f64>> = a
        .triplets()
        .map(|(i, j, v)| Triplet {
            row: i,
            col: j,
            val: v,
        })
        .collect();
    let csc = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &triplets)
        .map_err(|e| Error::InvalidInput(format!("sparse matrix creation failed: {e:?}")))?;
    let lu = csc
        .sp_lu()
        .map_err(|e| Error::Singular(format!("LU factorisation failed: {e:?}")))?;
    let solve = |rhs: &[f64]| -> Vec<f64> {
        let m = Mat::from_fn(n, 1, |i, _| rhs[i]);
        let sol = lu.solve(&m);
        (0..n).map(|i| sol[(i, 0)]).collect()
    };
    let mut x = solve(b);
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Singular(
            "LU solve produced non-finite values".into(),
        ));
    }
    let (mut r, mut rel) = relative_residual(a, &x, b);
    let mut steps = 0;
    while rel > tol && steps < 5 {
        let dx = solve(&r);
        for (x, d) in x.iter_mut().zip(&dx) {
            *x += d;
        }
        (r, rel) = relative_residual(a, &x, b);
        steps += 1;
    }
    if !(rel <= tol) {
        return Err(Error::NotConverged {
            iterations: steps,
            residual: rel,
        });
    }
    Ok((
        x,
        SolveReport {
            iterations: None,
            relative_residual: rel,
            seconds: start.elapsed().as_secs_f64(),
        },
    ))
}

/// `sqrt(v^T M v)` for symmetric positive semidefinite `M`.
pub fn weighted_norm(v: &[f64], m: &CsrMatrix) -> Result<f64> {
    let q = m.quadratic_form(v);
    if q >= 0.0 {
        return Ok(q.sqrt());
    }
    let scale = dot(v, v) * m.max_abs();
    if q < -1e-10 * scale {
        return Err(Error::NotPositiveDefinite(format!(
            "v^T M v = {q:e} is negative beyond round-off"
        )));
    }
    Ok(0.0)
}
