//! `key=value` run configuration.
//!
//! ```text
//! # L-shape, Jacobi estimator on the red refinement
//! problem=poisson_lshape
//! estimator=jacobi
//! theta=0.5
//! ```
//!
//! Recognised keys: `problem` (required), `estimator`, `variant` (`red` or
//! `degree`), `high_degree`, `degree`, `theta`, `max_dofs`, `norm`, `output`,
//! `seed`, `solver_tol`, `patch_degree`, `timing`, `saturation`.

use std::fmt::Write as _;
use std::path::PathBuf;

use crate::afem::AfemConfig;
use crate::estimators::{EstimatorKind, FineVariant, Norm};
use crate::problems::{self, Problem};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    Red,
    /// Degree raise to `high_degree` (default `degree + 1`).
    Degree,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub problem: String,
    pub estimator: EstimatorKind,
    pub variant: Variant,
    pub high_degree: Option<usize>,
    pub degree: usize,
    pub theta: f64,
    pub max_dofs: usize,
    pub norm: Norm,
    pub output: PathBuf,
    /// Seed of the contraction probes.
    pub seed: u64,
    pub solver_tol: f64,
    pub patch_degree: Option<usize>,
    /// Record wall time in the CSV (makes output run-dependent).
    pub timing: bool,
    pub saturation: bool,
}

impl RunConfig {
    /// Defaults for everything but the problem.
    pub fn new(problem: &str) -> Self {
        let d = AfemConfig::default();
        RunConfig {
            problem: problem.to_string(),
            estimator: d.estimator,
            variant: Variant::Red,
            high_degree: None,
            degree: d.degree,
            theta: d.theta,
            max_dofs: d.max_dofs,
            norm: d.norm,
            output: PathBuf::from("out"),
            seed: 0,
            solver_tol: d.solver_tol,
            patch_degree: None,
            timing: false,
            saturation: false,
        }
    }

    pub fn fine_variant(&self) -> FineVariant {
        match self.variant {
            Variant::Red => FineVariant::Red,
            Variant::Degree => {
                FineVariant::DegreeRaise(self.high_degree.unwrap_or(self.degree + 1))
            }
        }
    }

    pub fn afem_config(&self) -> AfemConfig {
        AfemConfig {
            theta: self.theta,
            estimator: self.estimator,
            norm: self.norm,
            degree: self.degree,
            max_dofs: self.max_dofs,
            variant: self.fine_variant(),
            patch_degree: self.patch_degree,
            solver_tol: self.solver_tol,
            record_timing: self.timing,
            measure_saturation: self.saturation,
            ..AfemConfig::default()
        }
    }

    pub fn build_problem(&self) -> Result<Problem> {
        problems::by_name(&self.problem)
    }

    /// Canonical text: every key in a fixed order, optional keys only when set.
    pub fn serialize(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "problem={}", self.problem);
        let _ = writeln!(s, "estimator={}", self.estimator);
        let _ = writeln!(
            s,
            "variant={}",
            match self.variant {
                Variant::Red => "red",
                Variant::Degree => "degree",
            }
        );
        if let Some(q) = self.high_degree {
            let _ = writeln!(s, "high_degree={q}");
        }
        let _ = writeln!(s, "degree={}", self.degree);
        let _ = writeln!(s, "theta={}", self.theta);
        let _ = writeln!(s, "max_dofs={}", self.max_dofs);
        let _ = writeln!(s, "norm={}", self.norm);
        let _ = writeln!(s, "output={}", self.output.display());
        let _ = writeln!(s, "seed={}", self.seed);
        let _ = writeln!(s, "solver_tol={:e}", self.solver_tol);
        if let Some(q) = self.patch_degree {
            let _ = writeln!(s, "patch_degree={q}");
        }
        let _ = writeln!(s, "timing={}", self.timing);
        let _ = writeln!(s, "saturation={}", self.saturation);
        s
    }
}

fn line_error(line: usize, msg: impl std::fmt::Display) -> Error {
    Error::Config(format!("line {line}: {msg}"))
}

fn number<T: std::str::FromStr>(line: usize, key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| line_error(line, format!("'{value}' is not a valid value for {key}")))
}

pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut cfg = RunConfig::new("");
    let mut seen: Vec<(&str, usize)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(line_error(
                line,
                format!("expected key=value, found '{content}'"),
            ));
        };
        let (key, value) = (key.trim(), value.trim());
        if let Some((_, first)) = seen.iter().find(|(k, _)| *k == key) {
            return Err(line_error(
                line,
                format!("duplicate key '{key}' (first set on line {first})"),
            ));
        }
        let enum_err = |e: Error| line_error(line, e);
        match key {
            "problem" => {
                if !problems::NAMES.contains(&value) {
                    return Err(line_error(
                        line,
                        format!(
                            "unknown problem '{value}' (expected one of {})",
                            problems::NAMES.join(", ")
                        ),
                    ));
                }
                cfg.problem = value.to_string();
            }
            "estimator" => cfg.estimator = value.parse().map_err(enum_err)?,
            "norm" => cfg.norm = value.parse().map_err(enum_err)?,
            "variant" => {
                cfg.variant = match value {
                    "red" => Variant::Red,
                    "degree" => Variant::Degree,
                    _ => {
                        return Err(line_error(
                            line,
                            format!("unknown variant '{value}' (expected red or degree)"),
                        ))
                    }
                }
            }
            "high_degree" => cfg.high_degree = Some(number(line, key, value)?),
            "patch_degree" => cfg.patch_degree = Some(number(line, key, value)?),
            "degree" => {
                cfg.degree = number(line, key, value)?;
                if cfg.degree == 0 {
                    return Err(line_error(line, "degree must be at least 1"));
                }
            }
            "theta" => {
                cfg.theta = number(line, key, value)?;
                if !(cfg.theta > 0.0 && cfg.theta <= 1.0) {
                    return Err(line_error(
                        line,
                        format!("theta = {value} is outside (0, 1]"),
                    ));
                }
            }
            "max_dofs" => {
                cfg.max_dofs = number(line, key, value)?;
                if cfg.max_dofs == 0 {
                    return Err(line_error(line, "max_dofs must be positive"));
                }
            }
            "output" => {
                if value.is_empty() {
                    return Err(line_error(line, "empty output directory"));
                }
                cfg.output = PathBuf::from(value);
            }
            "seed" => cfg.seed = number(line, key, value)?,
            "solver_tol" => {
                cfg.solver_tol = number(line, key, value)?;
                if !(cfg.solver_tol > 0.0 && cfg.solver_tol < 1.0) {
                    return Err(line_error(
                        line,
                        format!("solver_tol = {value} is outside (0, 1)"),
                    ));
                }
            }
            "timing" => cfg.timing = number(line, key, value)?,
            "saturation" => cfg.saturation = number(line, key, value)?,
            _ => return Err(line_error(line, format!("unknown key '{key}'"))),
        }
        seen.push((key, line));
    }
    let line_of = |key: &str| seen.iter().find(|(k, _)| *k == key).map(|(_, l)| *l);
    if line_of("problem").is_none() {
        return Err(Error::Config("missing required key 'problem'".into()));
    }
    if let Some(q) = cfg.high_degree {
        if q <= cfg.degree {
            let line = line_of("high_degree").unwrap_or(0);
            return Err(line_error(
                line,
                format!("high_degree {q} must exceed degree {}", cfg.degree),
            ));
        }
    }
    if let Some(q) = cfg.patch_degree {
        if q < cfg.degree {
            let line = line_of("patch_degree").unwrap_or(0);
            return Err(line_error(
                line,
                format!("patch_degree {q} is below degree {}", cfg.degree),
            ));
        }
    }
    Ok(cfg)
}

/// Canonical form of a configuration text.
pub fn normalize(text: &str) -> Result<String> {
    Ok(parse_config(text)?.serialize())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn problem_alone_gives_defaults() {
        let c = parse_config("problem=poisson_lshape").unwrap();
        assert_eq!(c, RunConfig::new("poisson_lshape"));
        assert_eq!(c.theta, 0.5);
        assert_eq!(c.degree, 1);
        assert_eq!(c.norm, Norm::H1Semi);
        assert_eq!(c.variant, Variant::Red);
        assert_eq!(c.afem_config(), AfemConfig::default());
    }

    #[test]
    fn theta_out_of_range() {
        let e = parse_config("problem=poisson_lshape\ntheta=1.5").unwrap_err();
        assert!(e.to_string().contains("line 2"), "{e}");
        assert!(e.to_string().contains("theta"));
    }

    #[test]
    fn serialize_parse_round_trip() {
        let text = "problem=poisson_lshape\nestimator=gauss_seidel\nnorm=l2\n";
        let canonical = normalize(text).unwrap();
        assert_eq!(normalize(&canonical).unwrap(), canonical);
        let c = parse_config(&canonical).unwrap();
        assert_eq!(c.estimator, EstimatorKind::GaussSeidel);
        assert_eq!(c.norm, Norm::L2);
        assert_eq!(c, parse_config(text).unwrap());
    }

    #[test]
    fn full_config_round_trips() {
        let mut c = RunConfig::new("convection_diffusion_interface");
        c.variant = Variant::Degree;
        c.high_degree = Some(3);
        c.degree = 2;
        c.theta = 0.3;
        c.solver_tol = 1e-11;
        c.patch_degree = Some(4);
        c.seed = 17;
        c.timing = true;
        c.output = PathBuf::from("results/cd");
        assert_eq!(parse_config(&c.serialize()).unwrap(), c);
        assert_eq!(c.fine_variant(), FineVariant::DegreeRaise(3));
    }

    #[test]
    fn comments_and_blank_lines() {
        let c =
            parse_config("# header\n\n  problem = poisson_square_smooth  # inline\nmax_dofs=500\n")
                .unwrap();
        assert_eq!(c.problem, "poisson_square_smooth");
        assert_eq!(c.max_dofs, 500);
    }

    #[test]
    fn errors_name_the_line() {
        let cases = [
            ("problem=poisson_lshape\nfoo=1", "line 2", "unknown key"),
            (
                "problem=poisson_lshape\n\nestimator=multigrid",
                "line 3",
                "multigrid",
            ),
            ("norm=l3\nproblem=poisson_lshape", "line 1", "l3"),
            ("problem=nowhere", "line 1", "nowhere"),
            (
                "problem=poisson_lshape\ndegree=2\nhigh_degree=2",
                "line 3",
                "high_degree",
            ),
            ("problem=poisson_lshape\njust text", "line 2", "key=value"),
            (
                "problem=poisson_lshape\nproblem=poisson_lshape",
                "line 2",
                "duplicate",
            ),
        ];
        for (text, line, what) in cases {
            let msg = parse_config(text).unwrap_err().to_string();
            assert!(msg.contains(line) && msg.contains(what), "{text:?}: {msg}");
        }
        assert!(parse_config("estimator=jacobi")
            .unwrap_err()
            .to_string()
            .contains("problem"));
    }
}
