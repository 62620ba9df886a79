use thiserror::Error;

/// Errors produced by mesh handling, discretization, solvers and drivers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate cell {cell}: |det J| = {det:e}")]
    DegenerateCell { cell: usize, det: f64 },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("singular matrix: {0}")]
    SingularMatrix(String),

    #[error("GMRES did not converge after {iterations} iterations (relative residual {residual:e})")]
    NotConverged {
        iterations: usize,
        residual: f64,
        /// Best iterate found before giving up.
        best: Vec<num_complex::Complex64>,
    },

    #[error("pole in dispersion relation: |omega(omega + i gamma) - beta^2 k^2| = {0:e}")]
    Pole(f64),

    #[error("invalid surface: {0}")]
    InvalidSurface(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("level {level}: {source}")]
    AtLevel {
        level: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// The error with any level context removed.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtLevel { source, .. } => source.root(),
            e => e,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
