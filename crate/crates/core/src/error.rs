use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("config: {0}")]
    Config(String),

    #[error("mesh is not valid: {0}")]
    InvalidMesh(String),

    #[error("nonpositive diffusion {value} at ({x}, {y})")]
    NonPositiveDiffusion { value: f64, x: f64, y: f64 },

    #[error("non-finite value at ({x}, {y})")]
    NonFinite { x: f64, y: f64 },

    #[error(
        "solver did not converge after {iterations} iterations (relative residual {residual:e})"
    )]
    NotConverged { iterations: usize, residual: f64 },

    #[error("adaptive loop stopped after {iterations} iterations at {dofs} dofs without reaching max_dofs")]
    IterationLimit { iterations: usize, dofs: usize },

    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(String),

    #[error("matrix is singular: {0}")]
    Singular(String),

    #[error("Galerkin orthogonality violated: |P^T r| = {projected:e}, |r| = {residual:e}")]
    Orthogonality { projected: f64, residual: f64 },

    #[error("all error indicators vanish")]
    ZeroIndicators,

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Whether the error stems from a numerical failure (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NotConverged { .. }
                | Error::IterationLimit { .. }
                | Error::NotPositiveDefinite(_)
                | Error::Singular(_)
                | Error::Orthogonality { .. }
                | Error::ZeroIndicators
                | Error::NonFinite { .. }
        )
    }
}
