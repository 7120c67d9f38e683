use thiserror::Error;

/// Errors raised by the solver library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("level set has no sign change on the grid")]
    NoInterface,

    #[error("invalid problem data: {0}")]
    InvalidProblem(String),

    #[error("unknown test case `{0}`")]
    UnknownCase(String),

    #[error("test case `{0}` has no exact solution")]
    NoExactSolution(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("multigrid configuration: {0}")]
    Configuration(String),

    #[error("solver diverged at cycle {cycle}: non-finite residual")]
    Divergence { cycle: usize },

    #[error("interface system is near-singular (condition estimate {condition:.3e})")]
    NearSingular { condition: f64 },

    #[error("case mismatch: {0}")]
    CaseMismatch(String),

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("empty subdomain: no cells selected")]
    EmptySubdomain,

    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
