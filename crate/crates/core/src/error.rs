use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parameter out of domain: {0}")]
    Parameter(String),

    #[error("mesh needs at least one subdivision per side (got n = {0})")]
    EmptyMesh(usize),

    #[error("point ({x}, {y}) is not on the boundary of the unit square")]
    NotOnBoundary { x: f64, y: f64 },

    #[error("no quadrature rule of degree {0} (supported: 1..=9)")]
    QuadratureDegree(usize),

    #[error("element {element} is degenerate (det J = {det:e})")]
    DegenerateElement { element: usize, det: f64 },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid time stepping: {0}")]
    TimeStep(String),

    #[error("dof {0} is not a boundary dof and cannot carry a Dirichlet value")]
    NotBoundaryDof(usize),

    #[error("Picard iteration did not converge after {iterations} iterations (last relative increment {increment:e})")]
    PicardDiverged { iterations: usize, increment: f64 },

    #[error("linear solve failed: {0}")]
    LinearSolveFailed(String),

    #[error(
        "decoupled scheme requires dt <= C*h^2 = {limit:e}, got dt = {dt:e} (set allow_unstable_dt to override)"
    )]
    StabilityProviso { dt: f64, limit: f64 },

    #[error("time step {step} (t = {t}): {source}")]
    Step {
        step: usize,
        t: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("refinement level n = {n}: {source}")]
    Level {
        n: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{failed} level(s) of the study failed")]
    StudyIncomplete { failed: usize },

    #[error("order undefined: {0}")]
    OrderUndefined(String),

    #[error("config key `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit status: 2 for configuration, 3 for solver, 4 for I/O errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. }
            | Error::Parameter(_)
            | Error::EmptyMesh(_)
            | Error::TimeStep(_)
            | Error::StabilityProviso { .. }
            | Error::QuadratureDegree(_) => 2,
            Error::Io { .. } => 4,
            Error::Level { source, .. } => source.exit_code(),
            _ => 3,
        }
    }
}
