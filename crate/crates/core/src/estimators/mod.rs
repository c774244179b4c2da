//! A posteriori error estimators built from the residual of the coarse
//! solution on an auxiliary fine space.
//!
//! The fine space is either the red refinement of the coarse mesh (same
//! degree) or the same mesh with a higher degree. In both cases the fine
//! residual `r = b_f - A_f P u_h` annihilates the coarse space, and applying a
//! smoother (inverse diagonal or inverse upper triangle of `A_f`) to `r`
//! gives a computable error estimate. Local indicators come from splitting
//! every dof contribution equally among the fine elements touching the dof
//! and summing fine elements into their coarse parents.

mod contraction;
mod patch;
mod residual;

use std::fmt;
use std::io::Write;
use std::str::FromStr;

pub use contraction::{contraction_factor_estimate, two_level_contraction, Smoother};
pub use patch::{implicit_patch_estimate, patch_energies};
pub use residual::{
    residual_estimate, residual_estimate_h1, residual_estimate_l2, ResidualWeights,
};

use crate::assembly::{
    assemble_load, assemble_matrix, element_matrix, matrix_quadrature_degree, Operator, Tabulation,
};
use crate::mesh::{uniform_red_refine, RefinementMap};
use crate::problems::Problem;
use crate::solve::weighted_norm;
use crate::space::{interpolate, FeSpace, Prolongation};
use crate::sparse::{norm_inf, CsrMatrix};
use crate::{par, Error, Result};

/// Largest admissible `||P^T r||_inf / ||r||_inf`.
pub const ORTHOGONALITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EstimatorKind {
    Jacobi,
    GaussSeidel,
    ImplicitPatch,
    ResidualH1,
    ResidualL2,
}

impl EstimatorKind {
    pub const ALL: [EstimatorKind; 5] = [
        EstimatorKind::Jacobi,
        EstimatorKind::GaussSeidel,
        EstimatorKind::ImplicitPatch,
        EstimatorKind::ResidualH1,
        EstimatorKind::ResidualL2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EstimatorKind::Jacobi => "jacobi",
            EstimatorKind::GaussSeidel => "gauss_seidel",
            EstimatorKind::ImplicitPatch => "implicit_patch",
            EstimatorKind::ResidualH1 => "residual_h1",
            EstimatorKind::ResidualL2 => "residual_l2",
        }
    }

    /// Whether the estimator needs the fine-space residual.
    pub fn uses_fine_space(self) -> bool {
        matches!(self, EstimatorKind::Jacobi | EstimatorKind::GaussSeidel)
    }
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EstimatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        EstimatorKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown estimator '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Norm {
    Energy,
    H1Semi,
    L2,
}

impl Norm {
    pub fn name(self) -> &'static str {
        match self {
            Norm::Energy => "energy",
            Norm::H1Semi => "h1_semi",
            Norm::L2 => "l2",
        }
    }
}

impl fmt::Display for Norm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Norm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "energy" => Ok(Norm::Energy),
            "h1_semi" => Ok(Norm::H1Semi),
            "l2" => Ok(Norm::L2),
            _ => Err(Error::InvalidInput(format!("unknown norm '{s}'"))),
        }
    }
}

/// Global estimate with its per-coarse-element indicators.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorResult {
    pub global: f64,
    /// `eta_T >= 0` for every coarse element.
    pub indicators: Vec<f64>,
    pub kind: EstimatorKind,
    pub norm: Norm,
}

impl EstimatorResult {
    fn from_squares(global: f64, squares: Vec<f64>, kind: EstimatorKind, norm: Norm) -> Self {
        EstimatorResult {
            global,
            indicators: squares.into_iter().map(|s| s.max(0.0).sqrt()).collect(),
            kind,
            norm,
        }
    }

    pub fn squared_indicators(&self) -> Vec<f64> {
        self.indicators.iter().map(|e| e * e).collect()
    }

    /// `|sqrt(sum eta_T^2) - global|`, relative to `global` when positive.
    pub fn splitting_defect(&self) -> f64 {
        let sum: f64 = self.indicators.iter().map(|e| e * e).sum::<f64>().sqrt();
        let d = (sum - self.global).abs();
        if self.global > 0.0 {
            d / self.global
        } else {
            d
        }
    }

    /// CSV with header `element,indicator`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["element", "indicator"])?;
        for (t, e) in self.indicators.iter().enumerate() {
            out.write_record([t.to_string(), format!("{e:.16e}")])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Maps every fine element to the coarse element containing it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Localization {
    pub fine_to_coarse: Vec<usize>,
    pub n_coarse: usize,
}

impl Localization {
    pub fn identity(n: usize) -> Self {
        Localization {
            fine_to_coarse: (0..n).collect(),
            n_coarse: n,
        }
    }

    pub fn from_refinement(map: &RefinementMap) -> Self {
        Localization {
            fine_to_coarse: map.parent_of.clone(),
            n_coarse: map.n_coarse_elements,
        }
    }

    /// Sums fine-element values into their coarse parents (in fine order).
    pub fn aggregate(&self, fine: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_coarse];
        for (t, v) in fine.iter().enumerate() {
            out[self.fine_to_coarse[t]] += v;
        }
        out
    }
}

/// Splits per-dof values (over the free dofs of `fine`) equally among the
/// fine elements whose closure contains each dof.
pub fn split_to_elements(fine: &FeSpace, free_values: &[f64]) -> Vec<f64> {
    par::map_range(fine.mesh().n_elements(), |t| {
        fine.element_dofs(t)
            .iter()
            .filter_map(|&g| {
                fine.free_position(g)
                    .map(|k| free_values[k] / fine.multiplicity(g) as f64)
            })
            .sum()
    })
}

/// Auxiliary fine space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FineVariant {
    /// Uniform red refinement with the same degree.
    Red,
    /// Same mesh, given higher degree.
    DegreeRaise(usize),
}

/// Coarse space, auxiliary fine space and the fine-space system.
#[derive(Debug, Clone)]
pub struct TwoLevel {
    pub coarse: FeSpace,
    pub fine: FeSpace,
    pub prolongation: Prolongation,
    /// Fine matrix over all fine dofs.
    pub fine_matrix: CsrMatrix,
    /// Fine load over all fine dofs.
    pub fine_load: Vec<f64>,
    /// Fine matrix restricted to the fine free dofs.
    pub fine_free_matrix: CsrMatrix,
    pub localization: Localization,
}

impl TwoLevel {
    pub fn new(problem: &Problem, coarse: &FeSpace, variant: FineVariant) -> Result<Self> {
        let (fine, prolongation, localization) = match variant {
            FineVariant::Red => {
                let (mesh, map) = uniform_red_refine(coarse.mesh());
                let fine = FeSpace::new(mesh, coarse.degree())?;
                let p = Prolongation::refinement(coarse, &fine, &map)?;
                (fine, p, Localization::from_refinement(&map))
            }
            FineVariant::DegreeRaise(q) => {
                let fine = FeSpace::new(coarse.mesh_arc().clone(), q)?;
                let p = Prolongation::degree_raise(coarse, &fine)?;
                (fine, p, Localization::identity(coarse.mesh().n_elements()))
            }
        };
        let fine_matrix = assemble_matrix(&fine, &problem.form)?;
        let fine_load = assemble_load(&fine, problem.rhs.as_ref());
        let fine_free_matrix = fine_matrix.submatrix(fine.free_dofs(), fine.free_dofs());
        Ok(TwoLevel {
            coarse: coarse.clone(),
            fine,
            prolongation,
            fine_matrix,
            fine_load,
            fine_free_matrix,
            localization,
        })
    }

    /// Coarse load `P^T b_f`, which equals the directly assembled coarse load
    /// up to quadrature and keeps the two levels exactly consistent.
    pub fn coarse_load(&self) -> Vec<f64> {
        self.prolongation.apply_transpose(&self.fine_load)
    }

    pub fn residual(&self, coarse_solution: &[f64]) -> Result<Residual> {
        fine_residual(
            coarse_solution,
            &self.fine_matrix,
            &self.fine_load,
            &self.prolongation,
            &self.fine,
            &self.coarse,
        )
    }

    /// Fine solution with the Dirichlet data interpolated on the fine space.
    pub fn solve_fine(&self, problem: &Problem, tol: f64) -> Result<Vec<f64>> {
        let g = interpolate(&self.fine, |x| (problem.dirichlet)(x))?;
        solve_system(
            &self.fine,
            &self.fine_matrix,
            &self.fine_load,
            &g,
            problem.form.is_symmetric(),
            tol,
        )
    }
}

/// Solves the Dirichlet problem `A u = b`, `u = g` on the boundary, and
/// returns the full solution vector.
pub fn solve_system(
    space: &FeSpace,
    a: &CsrMatrix,
    b: &[f64],
    lift: &[f64],
    symmetric: bool,
    tol: f64,
) -> Result<Vec<f64>> {
    let sys = crate::assembly::restrict_free(a, b, space, Some(lift));
    let (x, _) = if symmetric {
        crate::solve::solve_spd(&sys.matrix, &sys.rhs, tol)?
    } else {
        crate::solve::solve_general(&sys.matrix, &sys.rhs, tol)?
    };
    Ok(sys.expand(space, &x))
}

/// `b_f - A_f P u_h` on the fine free dofs.
#[derive(Debug, Clone, PartialEq)]
pub struct Residual {
    pub values: Vec<f64>,
    /// `||P^T r||_inf / ||r||_inf` (zero when `r = 0`).
    pub orthogonality: f64,
}

impl Residual {
    pub fn norm_inf(&self) -> f64 {
        norm_inf(&self.values)
    }
}

/// Fine residual of a coarse solution (full coarse vector including its
/// Dirichlet values). Fails if the residual does not annihilate the coarse
/// free dofs, which points at an inconsistent lift or form.
pub fn fine_residual(
    coarse_solution: &[f64],
    a_fine: &CsrMatrix,
    b_fine: &[f64],
    p: &Prolongation,
    fine: &FeSpace,
    coarse: &FeSpace,
) -> Result<Residual> {
    let u = p.apply(coarse_solution);
    let au = a_fine.mul_vec(&u);
    let full: Vec<f64> = b_fine.iter().zip(&au).map(|(b, a)| b - a).collect();
    let values = fine.restrict(&full);
    let r_inf = norm_inf(&values);
    let projected = p.free_block(fine, coarse).transpose_mul_vec(&values);
    let pr_inf = norm_inf(&projected);
    let orthogonality = if r_inf > 0.0 { pr_inf / r_inf } else { 0.0 };
    // Below this scale the residual is round-off and its direction is noise.
    let floor = 1e-13 * (norm_inf(b_fine) + a_fine.max_abs() * norm_inf(&u));
    if pr_inf > ORTHOGONALITY_TOL * r_inf && pr_inf > floor {
        return Err(Error::Orthogonality {
            projected: pr_inf,
            residual: r_inf,
        });
    }
    Ok(Residual {
        values,
        orthogonality,
    })
}

fn positive_diagonal(a: &CsrMatrix) -> Result<Vec<f64>> {
    let d = a.diagonal();
    if let Some(i) = d.iter().position(|&v| !(v > 0.0)) {
        return Err(Error::NotPositiveDefinite(format!(
            "diagonal entry {i} is {}",
            d[i]
        )));
    }
    Ok(d)
}

/// `D^{-1} r`.
pub fn jacobi_smooth(r: &[f64], a: &CsrMatrix) -> Result<Vec<f64>> {
    let d = positive_diagonal(a)?;
    Ok(r.iter().zip(&d).map(|(r, d)| r / d).collect())
}

/// `(D + U)^{-1} r` by back-substitution in dof order.
pub fn gauss_seidel_smooth(r: &[f64], a: &CsrMatrix) -> Result<Vec<f64>> {
    positive_diagonal(a)?;
    a.solve_upper_triangular(r)
}

/// Algebraic Jacobi estimator `sqrt(r^T D^{-1} r)` with local indicators.
///
/// `a` is the fine matrix on the free dofs (the raw diagonal is used for
/// nonsymmetric forms).
pub fn jacobi_estimate(
    r: &[f64],
    a: &CsrMatrix,
    fine: &FeSpace,
    loc: &Localization,
) -> Result<EstimatorResult> {
    let d = positive_diagonal(a)?;
    let contributions: Vec<f64> = r.iter().zip(&d).map(|(r, d)| r * r / d).collect();
    let global = contributions.iter().sum::<f64>().sqrt();
    let squares = loc.aggregate(&split_to_elements(fine, &contributions));
    Ok(EstimatorResult::from_squares(
        global,
        squares,
        EstimatorKind::Jacobi,
        Norm::Energy,
    ))
}

/// Measures a smoothed residual `x` (fine free dofs) in the norm given by
/// `metric`, with per-element contributions aggregated to coarse elements.
pub fn smoothed_norm_estimate(
    x: &[f64],
    fine: &FeSpace,
    metric: Operator<'_>,
    loc: &Localization,
    kind: EstimatorKind,
    norm: Norm,
) -> Result<EstimatorResult> {
    let full = fine.extend(x, None);
    let tab = Tabulation::new(fine, matrix_quadrature_degree(fine.degree()));
    let n = fine.n_local();
    let local = par::map_range(fine.mesh().n_elements(), |t| -> Result<f64> {
        let k = element_matrix(fine, t, metric, &tab)?;
        let xt: Vec<f64> = fine.element_dofs(t).iter().map(|&g| full[g]).collect();
        let mut q = 0.0;
        for i in 0..n {
            for j in 0..n {
                q += xt[i] * k[i * n + j] * xt[j];
            }
        }
        Ok(q.max(0.0))
    });
    let local = local.into_iter().collect::<Result<Vec<f64>>>()?;
    let m = crate::assembly::assemble(fine, metric)?;
    let global = weighted_norm(&full, &m)?;
    Ok(EstimatorResult::from_squares(
        global,
        loc.aggregate(&local),
        kind,
        norm,
    ))
}

/// Metric used to measure smoothed residuals for the requested norm.
pub fn metric_for<'a>(problem: &'a Problem, norm: Norm) -> Operator<'a> {
    match norm {
        Norm::L2 => Operator::Mass,
        Norm::Energy if problem.form.is_symmetric() => Operator::Form(&problem.form),
        _ => Operator::Stiffness,
    }
}

/// Smoother estimator of a coarse solution on a prepared two-level pair.
///
/// Jacobi in the energy or H1-seminorm of a symmetric problem is the
/// algebraic `sqrt(r^T D^{-1} r)`; every other combination measures the
/// smoothed residual in the requested norm.
pub fn smoother_estimate(
    problem: &Problem,
    two: &TwoLevel,
    residual: &Residual,
    kind: EstimatorKind,
    norm: Norm,
) -> Result<EstimatorResult> {
    let a = &two.fine_free_matrix;
    match kind {
        EstimatorKind::Jacobi if norm != Norm::L2 && problem.form.is_symmetric() => {
            let mut e = jacobi_estimate(&residual.values, a, &two.fine, &two.localization)?;
            e.norm = norm;
            Ok(e)
        }
        EstimatorKind::Jacobi => {
            let x = jacobi_smooth(&residual.values, a)?;
            smoothed_norm_estimate(
                &x,
                &two.fine,
                metric_for(problem, norm),
                &two.localization,
                kind,
                norm,
            )
        }
        EstimatorKind::GaussSeidel => {
            let x = gauss_seidel_smooth(&residual.values, a)?;
            smoothed_norm_estimate(
                &x,
                &two.fine,
                metric_for(problem, norm),
                &two.localization,
                kind,
                norm,
            )
        }
        other => Err(Error::InvalidInput(format!(
            "{other} is not a smoother estimator"
        ))),
    }
}

/// Smoother estimator with the auxiliary space of degree `q > p` on the
/// coarse mesh.
pub fn low_high_degree_estimate(
    problem: &Problem,
    coarse: &FeSpace,
    coarse_solution: &[f64],
    q: usize,
    kind: EstimatorKind,
    norm: Norm,
) -> Result<EstimatorResult> {
    let two = TwoLevel::new(problem, coarse, FineVariant::DegreeRaise(q))?;
    let r = two.residual(coarse_solution)?;
    smoother_estimate(problem, &two, &r, kind, norm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::BilinearForm;
    use crate::mesh::make_structured_square;
    use crate::problems::poisson_square_smooth;
    use std::sync::Arc;

    fn unit_load_problem(n: usize) -> Problem {
        let mut p = poisson_square_smooth();
        p.mesh = make_structured_square(n).unwrap();
        p.rhs = Arc::new(|_| 1.0);
        p.exact = None;
        p
    }

    fn coarse_solve(problem: &Problem, two: &TwoLevel) -> Vec<f64> {
        let a = assemble_matrix(&two.coarse, &problem.form).unwrap();
        let g = interpolate(&two.coarse, |x| (problem.dirichlet)(x)).unwrap();
        solve_system(&two.coarse, &a, &two.coarse_load(), &g, true, 1e-14).unwrap()
    }

    #[test]
    fn one_by_one_jacobi() {
        let s = FeSpace::new(make_structured_square(2).unwrap(), 1).unwrap();
        let a = CsrMatrix::from_dense(&[vec![2.0]]);
        let e = jacobi_estimate(&[3.0], &a, &s, &Localization::identity(8)).unwrap();
        assert!((e.global - (4.5f64).sqrt()).abs() < 1e-15);
        assert!(e.splitting_defect() < 1e-12);
        let z = jacobi_estimate(&[0.0], &a, &s, &Localization::identity(8)).unwrap();
        assert_eq!(z.global, 0.0);
        assert!(z.indicators.iter().all(|&v| v == 0.0));
        assert!(jacobi_estimate(
            &[1.0],
            &CsrMatrix::from_dense(&[vec![0.0]]),
            &s,
            &Localization::identity(8)
        )
        .is_err());
    }

    #[test]
    fn gauss_seidel_special_cases() {
        let d = CsrMatrix::from_dense(&[vec![2.0, 0.0], vec![0.0, 4.0]]);
        assert_eq!(
            gauss_seidel_smooth(&[2.0, 2.0], &d).unwrap(),
            vec![1.0, 0.5]
        );
        let u = CsrMatrix::from_dense(&[vec![2.0, 1.0], vec![0.0, 1.0]]);
        assert_eq!(
            gauss_seidel_smooth(&[3.0, 1.0], &u).unwrap(),
            vec![1.0, 1.0]
        );
        // Only the upper triangle matters.
        let full = CsrMatrix::from_dense(&[vec![2.0, 1.0], vec![7.0, 1.0]]);
        assert_eq!(
            gauss_seidel_smooth(&[3.0, 1.0], &full).unwrap(),
            vec![1.0, 1.0]
        );
    }

    #[test]
    fn residual_annihilates_coarse_space() {
        for variant in [FineVariant::Red, FineVariant::DegreeRaise(2)] {
            let p = unit_load_problem(4);
            let coarse = FeSpace::new(p.mesh.clone(), 1).unwrap();
            let two = TwoLevel::new(&p, &coarse, variant).unwrap();
            let u = coarse_solve(&p, &two);
            let r = two.residual(&u).unwrap();
            assert!(r.norm_inf() > 1e-4);
            assert!(r.orthogonality <= ORTHOGONALITY_TOL, "{}", r.orthogonality);
        }
    }

    #[test]
    fn inconsistent_solution_is_rejected() {
        let p = unit_load_problem(4);
        let coarse = FeSpace::new(p.mesh.clone(), 1).unwrap();
        let two = TwoLevel::new(&p, &coarse, FineVariant::Red).unwrap();
        let mut u = coarse_solve(&p, &two);
        u[coarse.free_dofs()[0]] += 0.1;
        assert!(matches!(two.residual(&u), Err(Error::Orthogonality { .. })));
    }

    #[test]
    fn residual_vanishes_when_solution_is_in_coarse_space() {
        // u = x + 2y is harmonic and reproduced by every space.
        let mut p = unit_load_problem(2);
        p.rhs = Arc::new(|_| 0.0);
        p.dirichlet = Arc::new(|x| x[0] + 2.0 * x[1]);
        let coarse = FeSpace::new(p.mesh.clone(), 1).unwrap();
        let two = TwoLevel::new(&p, &coarse, FineVariant::Red).unwrap();
        let u = coarse_solve(&p, &two);
        let r = two.residual(&u).unwrap();
        assert!(r.norm_inf() < 1e-10);
        let e = smoother_estimate(&p, &two, &r, EstimatorKind::Jacobi, Norm::H1Semi).unwrap();
        assert!(e.global < 1e-10);
    }

    #[test]
    fn smoothed_norm_splits_exactly() {
        let p = unit_load_problem(4);
        let coarse = FeSpace::new(p.mesh.clone(), 2).unwrap();
        let two = TwoLevel::new(&p, &coarse, FineVariant::Red).unwrap();
        let u = coarse_solve(&p, &two);
        let r = two.residual(&u).unwrap();
        for kind in [EstimatorKind::Jacobi, EstimatorKind::GaussSeidel] {
            for norm in [Norm::Energy, Norm::H1Semi, Norm::L2] {
                let e = smoother_estimate(&p, &two, &r, kind, norm).unwrap();
                assert_eq!(e.indicators.len(), coarse.mesh().n_elements());
                assert!(e.global > 0.0);
                assert!(
                    e.splitting_defect() < 1e-10,
                    "{kind} {norm}: {}",
                    e.splitting_defect()
                );
            }
        }
        let zero = smoothed_norm_estimate(
            &vec![0.0; two.fine.free_dofs().len()],
            &two.fine,
            Operator::Stiffness,
            &two.localization,
            EstimatorKind::GaussSeidel,
            Norm::H1Semi,
        )
        .unwrap();
        assert_eq!(zero.global, 0.0);
    }

    #[test]
    fn jacobi_is_invariant_under_dof_permutation() {
        let p = unit_load_problem(4);
        let coarse = FeSpace::new(p.mesh.clone(), 1).unwrap();
        let two = TwoLevel::new(&p, &coarse, FineVariant::Red).unwrap();
        let r = two.residual(&coarse_solve(&p, &two)).unwrap();
        let a = &two.fine_free_matrix;
        let n = r.values.len();
        let mut perm: Vec<usize> = (0..n).collect();
        {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            perm.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(11));
        }
        let pa = a.submatrix(&perm, &perm);
        let pr: Vec<f64> = perm.iter().map(|&i| r.values[i]).collect();
        let dense = |a: &CsrMatrix, r: &[f64]| -> f64 {
            r.iter()
                .enumerate()
                .map(|(i, v)| v * v / a.get(i, i))
                .sum::<f64>()
                .sqrt()
        };
        let e = jacobi_estimate(&r.values, a, &two.fine, &two.localization).unwrap();
        assert!((dense(&pa, &pr) - e.global).abs() <= 1e-14 * e.global);
    }

    #[test]
    fn nonsymmetric_forms_use_the_raw_diagonal() {
        let mut p = unit_load_problem(4);
        p.form = BilinearForm {
            diffusion: Arc::new(|_| 1.0),
            convection: Some(Arc::new(|_| [1.0, 2.0])),
            reaction: None,
        };
        let coarse = FeSpace::new(p.mesh.clone(), 1).unwrap();
        let two = TwoLevel::new(&p, &coarse, FineVariant::Red).unwrap();
        let a = assemble_matrix(&coarse, &p.form).unwrap();
        let g = vec![0.0; coarse.n_dofs()];
        let u = solve_system(&coarse, &a, &two.coarse_load(), &g, false, 1e-14).unwrap();
        let r = two.residual(&u).unwrap();
        let e = smoother_estimate(&p, &two, &r, EstimatorKind::Jacobi, Norm::H1Semi).unwrap();
        let x = jacobi_smooth(&r.values, &two.fine_free_matrix).unwrap();
        let k = crate::assembly::assemble_h1_seminorm_matrix(&two.fine);
        let full = two.fine.extend(&x, None);
        assert!((e.global - k.quadratic_form(&full).sqrt()).abs() <= 1e-12 * e.global);
    }

    #[test]
    fn csv_output() {
        let e = EstimatorResult {
            global: 1.0,
            indicators: vec![0.6, 0.8],
            kind: EstimatorKind::Jacobi,
            norm: Norm::H1Semi,
        };
        let mut buf = Vec::new();
        e.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("element,indicator"));
        for (k, line) in lines.enumerate() {
            let (t, v) = line.split_once(',').unwrap();
            assert_eq!(t.parse::<usize>().unwrap(), k);
            assert_eq!(v.parse::<f64>().unwrap(), e.indicators[k]);
        }
    }

    #[test]
    fn names_round_trip() {
        for k in EstimatorKind::ALL {
            assert_eq!(k.name().parse::<EstimatorKind>().unwrap(), k);
        }
        for n in [Norm::Energy, Norm::H1Semi, Norm::L2] {
            assert_eq!(n.name().parse::<Norm>().unwrap(), n);
        }
        assert!("sor".parse::<EstimatorKind>().is_err());
    }
}
