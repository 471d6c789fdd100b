use thiserror::Error;

pub type Result<T> = std::result::Result<T, CdftError>;

#[derive(Debug, Error)]
pub enum CdftError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("state is not normalized: integral of |psi|^2 = {norm}")]
    NotNormalized { norm: f64 },

    #[error("eigensolver did not converge after {iterations} iterations (residuals {residuals:?})")]
    NotConverged {
        iterations: usize,
        residuals: Vec<f64>,
    },

    /// No real scalar potential makes the state an eigenstate of H(., A).
    #[error("inconsistent inversion: imaginary residual {imag_residual:.3e} exceeds {tol:.1e}")]
    InconsistentInversion { imag_residual: f64, tol: f64 },

    /// A state expected to be a non-degenerate ground state was not certified.
    #[error("certification failed: {0}")]
    Certification(String),

    #[error("representation failure: {0}")]
    Representation(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("malformed field file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
