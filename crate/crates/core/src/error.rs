use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("Fock truncation too small: discarded tail mass {tail_mass:.3e} exceeds {threshold:.1e}")]
    Truncation { tail_mass: f64, threshold: f64 },

    #[error("polynomial term of degree ({m},{n}) needs dim > {needed}, got {dim}")]
    DegreeTooHigh { m: u32, n: u32, needed: usize, dim: usize },

    #[error("output dimension {needed} exceeds the available {available}")]
    OutputDimOverflow { needed: usize, available: usize },

    #[error("grid resolution failure: {0}")]
    GridResolution(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("rejection envelope rejected: {0}")]
    Envelope(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("singular configuration: {0}")]
    Singular(String),

    #[error("invalid state: {0}")]
    InvalidState(String),
}

impl Error {
    /// True for failures caused by insufficient numerical resolution
    /// (truncation, grid span, sampling envelope) rather than bad input.
    pub fn is_resolution(&self) -> bool {
        matches!(
            self,
            Error::Truncation { .. }
                | Error::GridResolution(_)
                | Error::Envelope(_)
                | Error::OutputDimOverflow { .. }
                | Error::Singular(_)
        )
    }
}
