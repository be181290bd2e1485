use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("degenerate modulus: log m is not integrable")]
    DegenerateModulus,
    #[error("symbol is of extreme type: log det(I - B*B) is not integrable")]
    ExtremeType,
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("function is not a member of the space (residual {0:e})")]
    NotMember(f64),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("space is not M_z-invariant")]
    NotMzInvariant,
    #[error("unsupported: {0}")]
    Unsupported(String),
}

impl Error {
    /// Errors caused by the caller's input rather than by the numerics.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::InvalidGrid(_) | Error::InvalidArgument(_) | Error::Unsupported(_)
        )
    }

    /// Errors that report a violated mathematical invariant of the input data.
    pub fn is_invariant(&self) -> bool {
        matches!(self, Error::Invariant(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
