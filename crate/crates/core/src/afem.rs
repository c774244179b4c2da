//! Dörfler marking, error measurement and the solve-estimate-mark-refine loop.

use std::fmt;
use std::io::{Read, Write};
use std::time::Instant;

use crate::assembly::{
    assemble, assemble_load, assemble_matrix, load_quadrature_degree, BilinearForm, Operator,
    Tabulation,
};
use crate::estimators::{
    implicit_patch_estimate, residual_estimate_h1, residual_estimate_l2, smoother_estimate,
    solve_system, EstimatorKind, EstimatorResult, FineVariant, Norm, Residual, TwoLevel,
    ORTHOGONALITY_TOL,
};
use crate::mesh::{bisect_marked, uniform_red_refine, Mesh};
use crate::problems::{ExactSolution, Problem};
use crate::solve::{weighted_norm, DEFAULT_TOL};
use crate::space::{interpolate, FeSpace};
use crate::{par, Error, Point, Result};

/// Tightest solver tolerance tried when restoring Galerkin orthogonality.
const MIN_SOLVER_TOL: f64 = 1e-16;

#[derive(Debug, Clone, PartialEq)]
pub struct AfemConfig {
    pub theta: f64,
    pub estimator: EstimatorKind,
    pub norm: Norm,
    pub degree: usize,
    pub max_dofs: usize,
    /// Auxiliary space of the smoother estimators.
    pub variant: FineVariant,
    /// Local degree of the vertex-patch estimator (default `degree + 1`).
    pub patch_degree: Option<usize>,
    pub solver_tol: f64,
    /// Record wall time in the `seconds` column; off by default so that
    /// repeated runs produce identical records.
    pub record_timing: bool,
    /// Also solve on the red refinement to measure the saturation constant.
    pub measure_saturation: bool,
    /// Safety cap on the number of loop iterations.
    pub max_iterations: usize,
}

impl Default for AfemConfig {
    fn default() -> Self {
        AfemConfig {
            theta: 0.5,
            estimator: EstimatorKind::Jacobi,
            norm: Norm::H1Semi,
            degree: 1,
            max_dofs: 10_000,
            variant: FineVariant::Red,
            patch_degree: None,
            solver_tol: DEFAULT_TOL,
            record_timing: false,
            measure_saturation: false,
            max_iterations: 200,
        }
    }
}

impl AfemConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.theta > 0.0 && self.theta <= 1.0) {
            return Err(Error::InvalidInput(format!(
                "theta = {} is outside (0, 1]",
                self.theta
            )));
        }
        if self.degree == 0 {
            return Err(Error::InvalidInput("degree must be at least 1".into()));
        }
        if let FineVariant::DegreeRaise(q) = self.variant {
            if q <= self.degree {
                return Err(Error::InvalidInput(format!(
                    "high degree {q} must exceed the degree {}",
                    self.degree
                )));
            }
        }
        if let Some(q) = self.patch_degree {
            if q < self.degree {
                return Err(Error::InvalidInput(format!(
                    "patch degree {q} is below the degree {}",
                    self.degree
                )));
            }
        }
        if !(self.solver_tol > 0.0 && self.solver_tol < 1.0) {
            return Err(Error::InvalidInput(format!(
                "solver tolerance {} is outside (0, 1)",
                self.solver_tol
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRow {
    pub iter: usize,
    pub dofs: usize,
    pub error: f64,
    pub estimator: f64,
    pub effectivity: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct IterationDiagnostics {
    pub n_elements: usize,
    /// Vertex coordinates of the elements marked in this iteration.
    pub marked: Vec<[Point; 3]>,
    /// `||P^T r||_inf / ||r||_inf` when a fine residual was computed.
    pub orthogonality: Option<f64>,
    /// `||u - u_{h/2}|| / ||u - u_h||` when requested and defined.
    pub saturation: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConvergenceRecord {
    pub rows: Vec<IterationRow>,
    pub diagnostics: Vec<IterationDiagnostics>,
    pub final_mesh: Option<Mesh>,
    /// Indicators `eta_T` of the last iteration.
    pub final_indicators: Vec<f64>,
}

pub const CSV_HEADER: [&str; 6] = [
    "iter",
    "dofs",
    "error",
    "estimator",
    "effectivity",
    "seconds",
];

pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

impl ConvergenceRecord {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(CSV_HEADER)?;
        for r in &self.rows {
            out.write_record([
                r.iter.to_string(),
                r.dofs.to_string(),
                format_float(r.error),
                format_float(r.estimator),
                format_float(r.effectivity),
                format_float(r.seconds),
            ])?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)
            .expect("writing to memory cannot fail");
        String::from_utf8(buf).expect("CSV output is UTF-8")
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Vec<IterationRow>> {
        let mut rdr = csv::Reader::from_reader(r);
        let header = rdr.headers()?.clone();
        if header.iter().ne(CSV_HEADER) {
            return Err(Error::InvalidInput(format!(
                "unexpected CSV header {header:?}"
            )));
        }
        let mut rows = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let num = |i: usize| -> Result<f64> {
                rec[i]
                    .parse()
                    .map_err(|_| Error::InvalidInput(format!("bad number '{}'", &rec[i])))
            };
            let int = |i: usize| -> Result<usize> {
                rec[i]
                    .parse()
                    .map_err(|_| Error::InvalidInput(format!("bad integer '{}'", &rec[i])))
            };
            rows.push(IterationRow {
                iter: int(0)?,
                dofs: int(1)?,
                error: num(2)?,
                estimator: num(3)?,
                effectivity: num(4)?,
                seconds: num(5)?,
            });
        }
        Ok(rows)
    }

    /// Least-squares slope of `log error` against `log dofs` over the last
    /// `k` rows.
    pub fn error_slope(&self, k: usize) -> Option<f64> {
        loglog_slope(&self.rows, k, |r| r.error)
    }

    pub fn estimator_slope(&self, k: usize) -> Option<f64> {
        loglog_slope(&self.rows, k, |r| r.estimator)
    }

    pub fn final_effectivity(&self) -> Option<f64> {
        self.rows.last().map(|r| r.effectivity)
    }
}

pub fn loglog_slope(
    rows: &[IterationRow],
    k: usize,
    f: impl Fn(&IterationRow) -> f64,
) -> Option<f64> {
    if rows.len() < 2 || k < 2 {
        return None;
    }
    let tail = &rows[rows.len().saturating_sub(k)..];
    let pts: Vec<(f64, f64)> = tail
        .iter()
        .map(|r| ((r.dofs as f64).ln(), f(r).ln()))
        .collect();
    if pts.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = pts.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// An aborted run together with the rows logged before the failure.
#[derive(Debug)]
pub struct AfemError {
    pub error: Error,
    pub partial: ConvergenceRecord,
}

impl fmt::Display for AfemError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} (after {} iterations)",
            self.error,
            self.partial.rows.len()
        )
    }
}

impl std::error::Error for AfemError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.error)
    }
}

/// Greedy Dörfler marking on squared indicators: elements are taken in
/// descending order of `eta_T^2` (ties by lower index) until their sum reaches
/// `theta` times the total. Returns the marked elements in ascending order.
pub fn dorfler_mark(eta_sq: &[f64], theta: f64) -> Result<Vec<usize>> {
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(Error::InvalidInput(format!(
            "theta = {theta} is outside (0, 1]"
        )));
    }
    if let Some(t) = eta_sq.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::InvalidInput(format!(
            "indicator {t} is {}",
            eta_sq[t]
        )));
    }
    let mut order: Vec<usize> = (0..eta_sq.len()).collect();
    order.sort_by(|&a, &b| eta_sq[b].total_cmp(&eta_sq[a]).then(a.cmp(&b)));
    // Summing in the same order as the accumulation below makes theta = 1
    // reach the total exactly.
    let total: f64 = order.iter().map(|&t| eta_sq[t]).sum();
    if total == 0.0 {
        return Err(Error::ZeroIndicators);
    }
    let target = theta * total;
    let mut acc = 0.0;
    let mut marked = Vec::new();
    for &t in &order {
        marked.push(t);
        acc += eta_sq[t];
        if acc >= target {
            break;
        }
    }
    marked.sort_unstable();
    Ok(marked)
}

/// Assembles and solves the problem on `space` with the directly assembled load.
pub fn solve_problem(problem: &Problem, space: &FeSpace, tol: f64) -> Result<Vec<f64>> {
    let a = assemble_matrix(space, &problem.form)?;
    let b = assemble_load(space, problem.rhs.as_ref());
    let g = interpolate(space, |x| (problem.dirichlet)(x))?;
    solve_system(space, &a, &b, &g, problem.form.is_symmetric(), tol)
}

fn touches(mesh: &Mesh, t: usize, points: &[Point]) -> bool {
    mesh.element_vertices(t).iter().any(|v| {
        points
            .iter()
            .any(|p| (v[0] - p[0]).abs() < 1e-14 && (v[1] - p[1]).abs() < 1e-14)
    })
}

/// `||u - u_h||` by elementwise quadrature of degree `2p + 2`, raised to
/// `2p + 6` on elements touching a singular point of `u`.
///
/// The energy norm uses the diffusion and reaction of `form` (the
/// H1 seminorm when `form` is `None`).
pub fn exact_error(
    space: &FeSpace,
    solution: &[f64],
    exact: &ExactSolution,
    norm: Norm,
    form: Option<&BilinearForm>,
) -> Result<f64> {
    let p = space.degree();
    let regular = Tabulation::new(space, load_quadrature_degree(p));
    let singular = Tabulation::new(space, 2 * p + 6);
    let mesh = space.mesh();
    let local = par::map_range(mesh.n_elements(), |t| -> Result<f64> {
        let tab = if touches(mesh, t, &exact.singular_points) {
            &singular
        } else {
            &regular
        };
        let map = space.element_map(t);
        let dofs = space.element_dofs(t);
        let mut sum = 0.0;
        for (q, jets) in tab.jets.iter().enumerate() {
            let [xi, eta] = tab.rule.points[q];
            let x = map.to_physical([1.0 - xi - eta, xi, eta]);
            let mut uh = 0.0;
            let mut guh = [0.0; 2];
            for (jet, &g) in jets.iter().zip(dofs) {
                uh += solution[g] * jet.value;
                let d = map.gradient(jet.d1);
                guh[0] += solution[g] * d[0];
                guh[1] += solution[g] * d[1];
            }
            let integrand = match norm {
                Norm::L2 => {
                    let e = (exact.value)(x) - uh;
                    e * e
                }
                Norm::H1Semi | Norm::Energy => {
                    let gu = (exact.gradient)(x);
                    let (ex, ey) = (gu[0] - guh[0], gu[1] - guh[1]);
                    let mut v = ex * ex + ey * ey;
                    if let (Norm::Energy, Some(form)) = (norm, form) {
                        v *= (form.diffusion)(x);
                        if let Some(c) = &form.reaction {
                            let e = (exact.value)(x) - uh;
                            v += c(x) * e * e;
                        }
                    }
                    v
                }
            };
            if !integrand.is_finite() {
                return Err(Error::NonFinite { x: x[0], y: x[1] });
            }
            sum += tab.rule.weights[q] * map.det * integrand;
        }
        Ok(sum)
    });
    let mut total = 0.0;
    for v in local {
        total += v?;
    }
    Ok(total.max(0.0).sqrt())
}

/// Gram matrix of `norm` on `space` (the H1 seminorm stands in for the
/// energy norm of a nonsymmetric form).
fn norm_operator<'a>(problem: &'a Problem, norm: Norm) -> Operator<'a> {
    match norm {
        Norm::L2 => Operator::Mass,
        Norm::Energy if problem.form.is_symmetric() => Operator::Form(&problem.form),
        _ => Operator::Stiffness,
    }
}

/// `||P u_h - u_{h/2}||` on a red-refined pair, with `u_{h/2}` solved here.
pub fn reference_error_on(
    problem: &Problem,
    two: &TwoLevel,
    coarse_solution: &[f64],
    norm: Norm,
    tol: f64,
) -> Result<f64> {
    let fine = two.solve_fine(problem, tol)?;
    reference_error_with(problem, two, coarse_solution, &fine, norm)
}

fn reference_error_with(
    problem: &Problem,
    two: &TwoLevel,
    coarse_solution: &[f64],
    fine: &[f64],
    norm: Norm,
) -> Result<f64> {
    let pu = two.prolongation.apply(coarse_solution);
    let diff: Vec<f64> = pu.iter().zip(fine).map(|(a, b)| a - b).collect();
    let m = match norm_operator(problem, norm) {
        Operator::Form(_) => two.fine_matrix.clone(),
        op => assemble(&two.fine, op)?,
    };
    weighted_norm(&diff, &m)
}

/// Reference error against the solution on the red refinement of `space`.
pub fn reference_error(
    problem: &Problem,
    space: &FeSpace,
    solution: &[f64],
    norm: Norm,
    tol: f64,
) -> Result<f64> {
    let two = TwoLevel::new(problem, space, FineVariant::Red)?;
    reference_error_on(problem, &two, solution, norm, tol)
}

/// Saturation ratios `||u - u_{h/2}|| / ||u - u_h||` along `levels` uniform red
/// refinements of the problem's initial mesh; `None` where `u_h` is exact.
pub fn saturation_estimate(
    problem: &Problem,
    degree: usize,
    levels: usize,
    norm: Norm,
    tol: f64,
) -> Result<Vec<Option<f64>>> {
    let exact = problem
        .exact
        .as_ref()
        .ok_or_else(|| Error::InvalidInput(format!("{} has no exact solution", problem.name)))?;
    let mut mesh = problem.mesh.clone();
    let mut errors = Vec::with_capacity(levels + 1);
    for level in 0..=levels {
        let space = FeSpace::new(mesh.clone(), degree)?;
        let u = solve_problem(problem, &space, tol)?;
        errors.push(exact_error(&space, &u, exact, norm, Some(&problem.form))?);
        if level < levels {
            mesh = uniform_red_refine(&mesh).0;
        }
    }
    Ok(errors
        .windows(2)
        .map(|w| (w[0] > 1e-14).then(|| w[1] / w[0]))
        .collect())
}

/// One solve-estimate step on a fixed space.
#[derive(Debug, Clone)]
pub struct Step {
    pub solution: Vec<f64>,
    pub estimate: EstimatorResult,
    pub error: f64,
    pub residual: Option<Residual>,
    pub saturation: Option<f64>,
}

/// Solves on `space`, evaluates the configured estimator and measures the
/// error (exact if available, otherwise against the red-refined solution).
pub fn solve_and_estimate(problem: &Problem, config: &AfemConfig, space: &FeSpace) -> Result<Step> {
    let kind = config.estimator;
    let needs_red_reference = problem.exact.is_none() || config.measure_saturation;
    let two = if kind.uses_fine_space() {
        Some(TwoLevel::new(problem, space, config.variant)?)
    } else {
        None
    };
    let own_red = match (&two, config.variant) {
        (Some(_), FineVariant::Red) => None,
        _ if needs_red_reference => Some(TwoLevel::new(problem, space, FineVariant::Red)?),
        _ => None,
    };
    let red = match (&own_red, config.variant) {
        (Some(r), _) => Some(r),
        (None, FineVariant::Red) if needs_red_reference => two.as_ref(),
        _ => None,
    };
    // With an auxiliary space the coarse load is P^T b_f, so that the fine
    // residual is orthogonal to the coarse space up to round-off.
    let a = assemble_matrix(space, &problem.form)?;
    let b = match &two {
        Some(t) => t.coarse_load(),
        None => assemble_load(space, problem.rhs.as_ref()),
    };
    let g = interpolate(space, |x| (problem.dirichlet)(x))?;
    let symmetric = problem.form.is_symmetric();

    // Tighten the solve until the residual is orthogonal to V_h. A residual
    // accepted only by the round-off floor is kept if no tighter solve is
    // possible.
    let mut tol = config.solver_tol;
    let mut fallback = None;
    let (solution, residual) = loop {
        let u = match solve_system(space, &a, &b, &g, symmetric, tol) {
            Ok(u) => u,
            Err(Error::NotConverged { .. }) if fallback.is_some() => {
                break fallback.expect("checked")
            }
            Err(e) => return Err(e),
        };
        let Some(t) = &two else {
            break (u, None);
        };
        let tighter = (tol * 1e-2).max(MIN_SOLVER_TOL);
        match t.residual(&u) {
            Ok(r) if r.orthogonality <= ORTHOGONALITY_TOL || tol <= MIN_SOLVER_TOL => {
                break (u, Some(r))
            }
            Ok(r) => {
                fallback = Some((u, Some(r)));
                tol = tighter;
            }
            Err(Error::Orthogonality { .. }) if tol > MIN_SOLVER_TOL => tol = tighter,
            Err(e) => return Err(e),
        }
    };

    let estimate = match kind {
        EstimatorKind::Jacobi | EstimatorKind::GaussSeidel => {
            let t = two
                .as_ref()
                .expect("smoother estimators build the auxiliary space");
            smoother_estimate(
                problem,
                t,
                residual.as_ref().expect("residual computed"),
                kind,
                config.norm,
            )?
        }
        EstimatorKind::ImplicitPatch => {
            let q = config.patch_degree.unwrap_or(config.degree + 1);
            implicit_patch_estimate(problem, space, &solution, q)?
        }
        EstimatorKind::ResidualH1 => residual_estimate_h1(problem, space, &solution)?,
        EstimatorKind::ResidualL2 => residual_estimate_l2(problem, space, &solution)?,
    };

    let fine_solution = match red {
        Some(r) => Some(r.solve_fine(problem, config.solver_tol)?),
        None => None,
    };
    let (error, saturation) = match &problem.exact {
        Some(exact) => {
            let e = exact_error(space, &solution, exact, config.norm, Some(&problem.form))?;
            let sat = match (red, &fine_solution) {
                (Some(r), Some(uf)) if config.measure_saturation && e > 1e-14 => {
                    Some(exact_error(&r.fine, uf, exact, config.norm, Some(&problem.form))? / e)
                }
                _ => None,
            };
            (e, sat)
        }
        None => {
            let r = red.expect("reference error needs the red refinement");
            let uf = fine_solution.as_ref().expect("fine solution computed");
            (
                reference_error_with(problem, r, &solution, uf, config.norm)?,
                None,
            )
        }
    };
    Ok(Step {
        solution,
        estimate,
        error,
        residual,
        saturation,
    })
}

/// Runs the adaptive loop until the dof count exceeds `max_dofs`.
pub fn afem_run(
    problem: &Problem,
    config: &AfemConfig,
) -> std::result::Result<ConvergenceRecord, AfemError> {
    let mut record = ConvergenceRecord::default();
    match run_into(problem, config, &mut record) {
        Ok(()) => Ok(record),
        Err(error) => Err(AfemError {
            error,
            partial: record,
        }),
    }
}

fn run_into(problem: &Problem, config: &AfemConfig, record: &mut ConvergenceRecord) -> Result<()> {
    config.validate()?;
    problem.check_mesh(&problem.mesh)?;
    let start = Instant::now();
    let mut mesh = problem.mesh.clone();
    for iter in 0..config.max_iterations {
        let space = FeSpace::new(mesh.clone(), config.degree)?;
        let dofs = space.n_dofs();
        if let Some(prev) = record.rows.last() {
            if dofs <= prev.dofs {
                return Err(Error::InvalidMesh(format!(
                    "dof count did not increase ({} -> {dofs})",
                    prev.dofs
                )));
            }
        }
        let step = solve_and_estimate(problem, config, &space)?;
        let seconds = if config.record_timing {
            start.elapsed().as_secs_f64()
        } else {
            0.0
        };
        record.rows.push(IterationRow {
            iter,
            dofs,
            error: step.error,
            estimator: step.estimate.global,
            effectivity: step.estimate.global / step.error,
            seconds,
        });
        record.final_indicators = step.estimate.indicators.clone();
        let mut diag = IterationDiagnostics {
            n_elements: mesh.n_elements(),
            marked: Vec::new(),
            orthogonality: step.residual.as_ref().map(|r| r.orthogonality),
            saturation: step.saturation,
        };
        if dofs > config.max_dofs {
            record.diagnostics.push(diag);
            record.final_mesh = Some(mesh);
            return Ok(());
        }
        let marked = match dorfler_mark(&step.estimate.squared_indicators(), config.theta) {
            Ok(m) => m,
            Err(e) => {
                record.diagnostics.push(diag);
                record.final_mesh = Some(mesh);
                return Err(e);
            }
        };
        diag.marked = marked.iter().map(|&t| mesh.element_vertices(t)).collect();
        record.diagnostics.push(diag);
        mesh = bisect_marked(&mesh, &marked);
    }
    record.final_mesh = Some(mesh);
    Err(Error::IterationLimit {
        iterations: config.max_iterations,
        dofs: record.rows.last().map_or(0, |r| r.dofs),
    })
}

/// Whether every residual of the run met the orthogonality threshold.
pub fn orthogonality_holds(record: &ConvergenceRecord) -> bool {
    record
        .diagnostics
        .iter()
        .filter_map(|d| d.orthogonality)
        .all(|o| o <= ORTHOGONALITY_TOL)
}
