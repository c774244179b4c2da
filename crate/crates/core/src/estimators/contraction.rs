use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::assembly::assemble_matrix;
use crate::par;
use crate::problems::Problem;
use crate::solve::solve_spd;
use crate::space::{FeSpace, Prolongation};
use crate::sparse::CsrMatrix;
use crate::{Error, Result};

/// Tolerance of the inner solves with the coarse matrix (and of the exact
/// smoother).
const INNER_TOL: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Smoother {
    Jacobi,
    GaussSeidelForward,
    GaussSeidelBackward,
    SymmetricGaussSeidel,
    /// `A^{-1}`, for testing.
    Exact,
}

impl Smoother {
    pub fn name(self) -> &'static str {
        match self {
            Smoother::Jacobi => "jacobi",
            Smoother::GaussSeidelForward => "gs_forward",
            Smoother::GaussSeidelBackward => "gs_backward",
            Smoother::SymmetricGaussSeidel => "sgs",
            Smoother::Exact => "exact",
        }
    }

    /// `S y`.
    pub fn apply(self, a: &CsrMatrix, y: &[f64]) -> Result<Vec<f64>> {
        match self {
            Smoother::Jacobi => Ok(y.iter().zip(a.diagonal()).map(|(y, d)| y / d).collect()),
            Smoother::GaussSeidelForward => a.solve_lower_triangular(y),
            Smoother::GaussSeidelBackward => a.solve_upper_triangular(y),
            Smoother::SymmetricGaussSeidel => {
                let x = a.solve_lower_triangular(y)?;
                let ax = a.mul_vec(&x);
                let r: Vec<f64> = y.iter().zip(&ax).map(|(y, ax)| y - ax).collect();
                let dx = a.solve_upper_triangular(&r)?;
                Ok(x.iter().zip(&dx).map(|(x, d)| x + d).collect())
            }
            Smoother::Exact => Ok(solve_spd(a, y, INNER_TOL)?.0),
        }
    }
}

impl fmt::Display for Smoother {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Smoother {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            Smoother::Jacobi,
            Smoother::GaussSeidelForward,
            Smoother::GaussSeidelBackward,
            Smoother::SymmetricGaussSeidel,
            Smoother::Exact,
        ]
        .into_iter()
        .find(|k| k.name() == s)
        .ok_or_else(|| Error::InvalidInput(format!("unknown smoother '{s}'")))
    }
}

/// Probe-based estimate of the energy norm of the two-level error operator
/// `E = (I - S A_f)(I - P A_c^{-1} P^T A_f)`: the largest `||E v||_A / ||v||_A`
/// over `probes` random vectors with entries uniform in `[-1, 1]`. Probe `k`
/// uses the generator seeded with `seed + k`.
///
/// All matrices act on free dofs; `p` has fine rows and coarse columns.
pub fn contraction_factor_estimate(
    a_fine: &CsrMatrix,
    a_coarse: &CsrMatrix,
    p: &CsrMatrix,
    smoother: Smoother,
    probes: usize,
    seed: u64,
) -> Result<f64> {
    let n = a_fine.nrows();
    if p.nrows() != n || p.ncols() != a_coarse.nrows() {
        return Err(Error::InvalidInput(
            "prolongation does not match the matrices".into(),
        ));
    }
    for (name, a) in [("fine", a_fine), ("coarse", a_coarse)] {
        if !a.is_symmetric(1e-12) {
            return Err(Error::NotPositiveDefinite(format!(
                "{name} matrix is not symmetric"
            )));
        }
    }
    let ratios = par::map_range(probes, |k| -> Result<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(k as u64));
        let v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect();
        let norm_v = a_fine.quadratic_form(&v);
        if !(norm_v > 0.0) {
            return Err(Error::NotPositiveDefinite(
                "v^T A v <= 0 for a probe".into(),
            ));
        }
        // Coarse-grid correction.
        let av = a_fine.mul_vec(&v);
        let (ec, _) = solve_spd(a_coarse, &p.transpose_mul_vec(&av), INNER_TOL)?;
        let pe = p.mul_vec(&ec);
        let w: Vec<f64> = v.iter().zip(&pe).map(|(v, pe)| v - pe).collect();
        // Smoothing.
        let sw = smoother.apply(a_fine, &a_fine.mul_vec(&w))?;
        let ev: Vec<f64> = w.iter().zip(&sw).map(|(w, s)| w - s).collect();
        Ok((a_fine.quadratic_form(&ev).max(0.0) / norm_v).sqrt())
    });
    let mut rho: f64 = 0.0;
    for r in ratios {
        rho = rho.max(r?);
    }
    Ok(rho)
}

/// Contraction factor of the two-level hierarchy formed by `coarse` and its
/// uniform red refinement, with the matrices of `problem` on the free dofs.
pub fn two_level_contraction(
    problem: &Problem,
    coarse: &FeSpace,
    smoother: Smoother,
    probes: usize,
    seed: u64,
) -> Result<f64> {
    let (fine_mesh, map) = crate::mesh::uniform_red_refine(coarse.mesh());
    let fine = FeSpace::new(fine_mesh, coarse.degree())?;
    let af = assemble_matrix(&fine, &problem.form)?;
    let ac = assemble_matrix(coarse, &problem.form)?;
    let p = Prolongation::refinement(coarse, &fine, &map)?;
    contraction_factor_estimate(
        &af.submatrix(fine.free_dofs(), fine.free_dofs()),
        &ac.submatrix(coarse.free_dofs(), coarse.free_dofs()),
        &p.free_block(&fine, coarse),
        smoother,
        probes,
        seed,
    )
}
