//! Quick invariant suite behind the `check` command.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::afem::{afem_run, dorfler_mark, AfemConfig, ConvergenceRecord};
use crate::assembly::{assemble_h1_seminorm_matrix, assemble_mass_matrix, assemble_matrix};
use crate::estimators::{
    implicit_patch_estimate, residual_estimate_h1, smoother_estimate, solve_system,
    two_level_contraction, EstimatorKind, FineVariant, Norm, Smoother, TwoLevel, ORTHOGONALITY_TOL,
};
use crate::mesh::{bisect_marked, make_structured_square, uniform_red_refine};
use crate::problems::{self, Problem};
use crate::space::{interpolate, FeSpace};
use crate::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn outcome(name: &'static str, result: Result<(bool, String)>) -> CheckOutcome {
    match result {
        Ok((passed, detail)) => CheckOutcome {
            name,
            passed,
            detail,
        },
        Err(e) => CheckOutcome {
            name,
            passed: false,
            detail: format!("error: {e}"),
        },
    }
}

fn meshes_stay_conforming() -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0;
    for name in problems::NAMES {
        let mut mesh = problems::by_name(name)?.mesh;
        worst = worst.max(mesh.validate().len());
        worst = worst.max(uniform_red_refine(&mesh).0.validate().len());
        for _ in 0..6 {
            let marked: Vec<usize> = (0..mesh.n_elements())
                .filter(|_| rng.random_bool(0.2))
                .collect();
            mesh = bisect_marked(&mesh, &marked);
            worst = worst.max(mesh.validate().len());
        }
    }
    Ok((worst == 0, format!("{worst} violations")))
}

fn interpolation_is_exact() -> Result<(bool, String)> {
    let mesh = make_structured_square(3)?;
    let mut worst: f64 = 0.0;
    for p in 1..=4 {
        let space = FeSpace::new(mesh.clone(), p)?;
        let f = move |x: [f64; 2]| (x[0] + 2.0 * x[1]).powi(p as i32);
        let u = interpolate(&space, f)?;
        for t in 0..mesh.n_elements() {
            let l = [0.2, 0.3, 0.5];
            let x = space.element_map(t).to_physical(l);
            worst = worst.max((space.evaluate(&u, t, l) - f(x)).abs());
        }
    }
    Ok((worst < 1e-12, format!("max deviation {worst:e}")))
}

fn assembly_invariants() -> Result<(bool, String)> {
    let space = FeSpace::new(problems::poisson_lshape().mesh, 2)?;
    let k = assemble_h1_seminorm_matrix(&space);
    let ones = vec![1.0; space.n_dofs()];
    let row_sum = k.mul_vec(&ones).iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let area = assemble_mass_matrix(&space).quadratic_form(&ones);
    let ok = row_sum < 1e-12 && (area - 3.0).abs() < 1e-12 && k.is_symmetric(1e-14);
    Ok((
        ok,
        format!("stiffness row sums {row_sum:e}, mass total {area}"),
    ))
}

/// Coarse solution with the load `P^T b_f` of the two-level pair.
fn consistent_solution(problem: &Problem, space: &FeSpace, two: &TwoLevel) -> Result<Vec<f64>> {
    solve_system(
        space,
        &assemble_matrix(space, &problem.form)?,
        &two.coarse_load(),
        &interpolate(space, |x| (problem.dirichlet)(x))?,
        problem.form.is_symmetric(),
        1e-13,
    )
}

fn galerkin_orthogonality() -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    for name in problems::NAMES {
        let problem = problems::by_name(name)?;
        for (p, variant) in [
            (1, FineVariant::Red),
            (2, FineVariant::Red),
            (1, FineVariant::DegreeRaise(2)),
        ] {
            let space = FeSpace::new(problem.mesh.clone(), p)?;
            let two = TwoLevel::new(&problem, &space, variant)?;
            let u = consistent_solution(&problem, &space, &two)?;
            worst = worst.max(two.residual(&u)?.orthogonality);
        }
    }
    Ok((
        worst <= ORTHOGONALITY_TOL,
        format!("max |P^T r| / |r| = {worst:e}"),
    ))
}

fn splitting_is_exact(problem: &Problem) -> Result<(bool, String)> {
    let space = FeSpace::new(problem.mesh.clone(), 1)?;
    let two = TwoLevel::new(problem, &space, FineVariant::Red)?;
    let u = consistent_solution(problem, &space, &two)?;
    let r = two.residual(&u)?;
    let mut worst: f64 = 0.0;
    for kind in [EstimatorKind::Jacobi, EstimatorKind::GaussSeidel] {
        for norm in [Norm::Energy, Norm::H1Semi, Norm::L2] {
            worst = worst.max(smoother_estimate(problem, &two, &r, kind, norm)?.splitting_defect());
        }
    }
    worst = worst.max(implicit_patch_estimate(problem, &space, &u, 2)?.splitting_defect());
    worst = worst.max(residual_estimate_h1(problem, &space, &u)?.splitting_defect());
    Ok((
        worst < 1e-10,
        format!("max |sum eta_T^2 - eta^2| / eta^2 = {worst:e}"),
    ))
}

fn dorfler_is_minimal() -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..100 {
        let eta: Vec<f64> = (0..rng.random_range(1..60))
            .map(|_| rng.random::<f64>().powi(4))
            .collect();
        let theta = rng.random_range(0.05..=1.0);
        let marked = dorfler_mark(&eta, theta)?;
        let total: f64 = eta.iter().sum();
        let sum: f64 = marked.iter().map(|&t| eta[t]).sum();
        let smallest = marked.iter().map(|&t| eta[t]).fold(f64::INFINITY, f64::min);
        if sum < theta * total * (1.0 - 1e-12) || sum - smallest >= theta * total {
            return Ok((
                false,
                format!("theta = {theta}: marked {marked:?} of {eta:?}"),
            ));
        }
    }
    Ok((true, "100 random cases".into()))
}

fn two_level_contracts() -> Result<(bool, String)> {
    let mut problem = problems::poisson_square_smooth();
    problem.mesh = make_structured_square(8)?;
    let space = FeSpace::new(problem.mesh.clone(), 1)?;
    let rho = two_level_contraction(&problem, &space, Smoother::GaussSeidelBackward, 20, 0)?;
    Ok((rho < 1.0, format!("rho = {rho:.4}")))
}

fn afem_is_deterministic() -> Result<(bool, String)> {
    let problem = problems::poisson_lshape();
    let config = AfemConfig {
        max_dofs: 300,
        ..AfemConfig::default()
    };
    let a = afem_run(&problem, &config).map_err(|e| e.error)?;
    let b = afem_run(&problem, &config).map_err(|e| e.error)?;
    let same = a.to_csv_string() == b.to_csv_string();
    let rows = ConvergenceRecord::read_csv(a.to_csv_string().as_bytes())?;
    let lossless = rows == a.rows;
    Ok((
        same && lossless,
        format!(
            "{} iterations, CSV identical: {same}, round trip: {lossless}",
            a.rows.len()
        ),
    ))
}

/// Runs every check; takes a few seconds.
pub fn run_checks() -> Vec<CheckOutcome> {
    vec![
        outcome("mesh conformity under refinement", meshes_stay_conforming()),
        outcome("interpolation exact for degree p", interpolation_is_exact()),
        outcome("stiffness and mass invariants", assembly_invariants()),
        outcome(
            "Galerkin orthogonality of fine residuals",
            galerkin_orthogonality(),
        ),
        outcome(
            "indicators split the global estimate",
            splitting_is_exact(&problems::poisson_lshape()),
        ),
        outcome("Dörfler marking is minimal", dorfler_is_minimal()),
        outcome("two-level Gauss-Seidel contracts", two_level_contracts()),
        outcome("AFEM runs are reproducible", afem_is_deterministic()),
    ]
}
