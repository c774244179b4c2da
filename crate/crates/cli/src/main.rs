//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 on invalid input or configuration, 2 when a
//! run aborts on a numerical failure (or an invariant check fails).

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use smoothfem::checks::run_checks;
use smoothfem::config::{parse_config, RunConfig};
use smoothfem::estimators::EstimatorKind;
use smoothfem::experiment::{compare_estimators, mesh_dump, run_experiment};
use smoothfem::Error;

#[derive(Parser)]
#[command(
    name = "smoothfem",
    version,
    about = "Adaptive finite elements with smoother-based error estimators"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the adaptive loop for a configuration file.
    Run {
        config: PathBuf,
        /// Override the output directory of the configuration.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Run several estimators on the same configuration and merge the results.
    Compare {
        config: PathBuf,
        /// Comma-separated estimator names, e.g. `jacobi,residual_h1`.
        #[arg(long, value_delimiter = ',', required = true)]
        estimators: Vec<String>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Write the initial mesh of the configured problem (Triangle format and SVG).
    MeshDump {
        config: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Run the invariant suite.
    Check,
}

fn load(path: &PathBuf, output: Option<PathBuf>) -> Result<RunConfig, Error> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::InvalidInput(format!("cannot read {}: {e}", path.display())))?;
    let mut config = parse_config(&text)?;
    if let Some(dir) = output {
        config.output = dir;
    }
    Ok(config)
}

fn exit_code(e: &Error) -> ExitCode {
    if e.is_numerical() {
        ExitCode::from(2)
    } else {
        ExitCode::from(1)
    }
}

fn execute(command: Command) -> Result<ExitCode, Error> {
    match command {
        Command::Run { config, output } => {
            let config = load(&config, output)?;
            let out = run_experiment(&config)?;
            print!("{}", out.summary.to_text());
            println!("output written to {}", config.output.display());
        }
        Command::Compare {
            config,
            estimators,
            output,
        } => {
            let config = load(&config, output)?;
            let kinds = estimators
                .iter()
                .map(|s| s.trim().parse::<EstimatorKind>())
                .collect::<Result<Vec<_>, _>>()?;
            for run in compare_estimators(&config, &kinds)? {
                let s = &run.summary;
                println!(
                    "{:<16} iterations {:>3}  dofs {:>7}  slope {:>8}  effectivity {:>8}",
                    s.estimator.name(),
                    s.iterations,
                    s.final_dofs,
                    s.error_slope.map_or("n/a".into(), |v| format!("{v:.4}")),
                    s.final_effectivity
                        .map_or("n/a".into(), |v| format!("{v:.4}")),
                );
            }
            println!("output written to {}", config.output.display());
        }
        Command::MeshDump { config, output } => {
            let config = load(&config, output)?;
            mesh_dump(&config)?;
            println!("mesh written to {}", config.output.display());
        }
        Command::Check => {
            let outcomes = run_checks();
            for c in &outcomes {
                println!(
                    "{} {}: {}",
                    if c.passed { "ok  " } else { "FAIL" },
                    c.name,
                    c.detail
                );
            }
            if outcomes.iter().any(|c| !c.passed) {
                return Ok(ExitCode::from(2));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // clap uses 2 for usage errors; here 2 is reserved for numerical aborts.
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
