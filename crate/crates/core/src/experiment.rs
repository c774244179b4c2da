//! File-producing drivers: single runs, estimator comparisons and mesh dumps.

use std::fmt::Write as _;
use std::fs;
use std::io::BufWriter;
use std::path::Path;

use crate::afem::{afem_run, format_float, ConvergenceRecord};
use crate::config::RunConfig;
use crate::estimators::{two_level_contraction, EstimatorKind, Smoother};
use crate::mesh::io::{mesh_svg, save_triangle};
use crate::plot::{loglog_svg, Series};
use crate::problems::Problem;
use crate::space::FeSpace;
use crate::{par, Error, Result};

/// Iterations used for the fitted convergence slopes.
pub const SLOPE_WINDOW: usize = 5;

/// Probes of the contraction diagnostic in the summary.
pub const CONTRACTION_PROBES: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub problem: String,
    pub estimator: EstimatorKind,
    pub iterations: usize,
    pub final_dofs: usize,
    pub final_effectivity: Option<f64>,
    pub error_slope: Option<f64>,
    pub estimator_slope: Option<f64>,
    /// Largest `||P^T r||_inf / ||r||_inf` over the run.
    pub max_orthogonality: Option<f64>,
    /// Two-level Gauss-Seidel contraction factor on the final mesh (symmetric
    /// problems only).
    pub contraction: Option<f64>,
    pub aborted: Option<String>,
}

impl Summary {
    fn new(config: &RunConfig, record: &ConvergenceRecord) -> Self {
        Summary {
            problem: config.problem.clone(),
            estimator: config.estimator,
            iterations: record.rows.len(),
            final_dofs: record.rows.last().map_or(0, |r| r.dofs),
            final_effectivity: record.final_effectivity(),
            error_slope: record.error_slope(SLOPE_WINDOW),
            estimator_slope: record.estimator_slope(SLOPE_WINDOW),
            max_orthogonality: record
                .diagnostics
                .iter()
                .filter_map(|d| d.orthogonality)
                .reduce(f64::max),
            contraction: None,
            aborted: None,
        }
    }

    pub fn to_text(&self) -> String {
        let opt = |v: Option<f64>| v.map_or_else(|| "n/a".to_string(), format_float);
        let mut s = String::new();
        let _ = writeln!(s, "problem={}", self.problem);
        let _ = writeln!(s, "estimator={}", self.estimator);
        let _ = writeln!(s, "iterations={}", self.iterations);
        let _ = writeln!(s, "final_dofs={}", self.final_dofs);
        let _ = writeln!(s, "final_effectivity={}", opt(self.final_effectivity));
        let _ = writeln!(s, "error_slope={}", opt(self.error_slope));
        let _ = writeln!(s, "estimator_slope={}", opt(self.estimator_slope));
        let _ = writeln!(s, "max_orthogonality={}", opt(self.max_orthogonality));
        let _ = writeln!(s, "contraction_gs={}", opt(self.contraction));
        if let Some(reason) = &self.aborted {
            let _ = writeln!(s, "aborted={reason}");
        }
        s
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub record: ConvergenceRecord,
    pub summary: Summary,
}

fn write_csv(record: &ConvergenceRecord, path: &Path) -> Result<()> {
    record.write_csv(BufWriter::new(fs::File::create(path)?))
}

fn convergence_series(record: &ConvergenceRecord, prefix: &str) -> [Series; 2] {
    [
        Series::new(
            format!("{prefix}error"),
            record
                .rows
                .iter()
                .map(|r| (r.dofs as f64, r.error))
                .collect(),
        ),
        Series::new(
            format!("{prefix}estimate"),
            record
                .rows
                .iter()
                .map(|r| (r.dofs as f64, r.estimator))
                .collect(),
        )
        .dashed(),
    ]
}

fn contraction_on(
    problem: &Problem,
    config: &RunConfig,
    record: &ConvergenceRecord,
) -> Result<Option<f64>> {
    let Some(mesh) = &record.final_mesh else {
        return Ok(None);
    };
    if !problem.form.is_symmetric() {
        return Ok(None);
    }
    let space = FeSpace::new(mesh.clone(), config.degree)?;
    two_level_contraction(
        problem,
        &space,
        Smoother::GaussSeidelBackward,
        CONTRACTION_PROBES,
        config.seed,
    )
    .map(Some)
}

/// Runs the adaptive loop and writes `convergence.csv`, `convergence.svg`,
/// `mesh_final.svg` and `summary.txt` into the output directory. On abort the
/// rows computed so far are still written before the error is returned.
pub fn run_experiment(config: &RunConfig) -> Result<ExperimentOutput> {
    let problem = config.build_problem()?;
    let dir = &config.output;
    fs::create_dir_all(dir)?;
    let (record, failure) = match afem_run(&problem, &config.afem_config()) {
        Ok(r) => (r, None),
        Err(e) => (e.partial, Some(e.error)),
    };
    write_csv(&record, &dir.join("convergence.csv"))?;
    let mut summary = Summary::new(config, &record);
    if let Some(err) = failure {
        summary.aborted = Some(err.to_string());
        fs::write(dir.join("summary.txt"), summary.to_text())?;
        return Err(err);
    }
    summary.contraction = contraction_on(&problem, config, &record)?;

    let title = format!(
        "{} / {} (p = {})",
        config.problem, config.estimator, config.degree
    );
    let svg = loglog_svg(
        &title,
        "degrees of freedom",
        config.norm.name(),
        &convergence_series(&record, ""),
    );
    fs::write(dir.join("convergence.svg"), svg)?;
    if let Some(mesh) = &record.final_mesh {
        fs::write(
            dir.join("mesh_final.svg"),
            mesh_svg(mesh, Some(&record.final_indicators)),
        )?;
    }
    fs::write(dir.join("summary.txt"), summary.to_text())?;
    Ok(ExperimentOutput { record, summary })
}

pub const COMPARISON_HEADER: [&str; 6] = [
    "estimator",
    "iter",
    "dofs",
    "error",
    "estimate",
    "effectivity",
];

/// One run per estimator (each in its own subdirectory of the output
/// directory), merged into `comparison.csv` and `comparison.svg`.
pub fn compare_estimators(
    config: &RunConfig,
    estimators: &[EstimatorKind],
) -> Result<Vec<ExperimentOutput>> {
    if estimators.len() < 2 {
        return Err(Error::InvalidInput(
            "a comparison needs at least two estimators".into(),
        ));
    }
    if let Some(k) = estimators
        .iter()
        .enumerate()
        .find_map(|(i, k)| estimators[..i].contains(k).then_some(k))
    {
        return Err(Error::InvalidInput(format!("estimator {k} listed twice")));
    }
    fs::create_dir_all(&config.output)?;
    let runs = par::map_slice(estimators, |&kind| {
        let mut c = config.clone();
        c.estimator = kind;
        c.output = config.output.join(kind.name());
        run_experiment(&c)
    });
    let runs = runs.into_iter().collect::<Result<Vec<_>>>()?;

    let mut w = csv::Writer::from_writer(BufWriter::new(fs::File::create(
        config.output.join("comparison.csv"),
    )?));
    w.write_record(COMPARISON_HEADER)?;
    for run in &runs {
        for r in &run.record.rows {
            w.write_record([
                run.summary.estimator.name().to_string(),
                r.iter.to_string(),
                r.dofs.to_string(),
                format_float(r.error),
                format_float(r.estimator),
                format_float(r.effectivity),
            ])?;
        }
    }
    w.flush()?;

    let series: Vec<Series> = runs
        .iter()
        .flat_map(|run| convergence_series(&run.record, &format!("{} ", run.summary.estimator)))
        .collect();
    let title = format!(
        "{}: estimator comparison (p = {})",
        config.problem, config.degree
    );
    fs::write(
        config.output.join("comparison.svg"),
        loglog_svg(&title, "degrees of freedom", config.norm.name(), &series),
    )?;
    Ok(runs)
}

/// Writes the initial mesh of the configured problem as Triangle files
/// (`mesh.node`, `mesh.ele`, `mesh.edge`) and `mesh.svg`.
pub fn mesh_dump(config: &RunConfig) -> Result<()> {
    let problem = config.build_problem()?;
    save_triangle(&problem.mesh, &config.output, "mesh")?;
    fs::write(
        config.output.join("mesh.svg"),
        mesh_svg(&problem.mesh, None),
    )?;
    Ok(())
}
