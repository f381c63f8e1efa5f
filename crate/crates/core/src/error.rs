use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("operator is not Hermitian (max deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("state is not normalized (norm {norm})")]
    NotNormalized { norm: f64 },

    #[error("states are not orthogonal (overlap {overlap:.3e})")]
    NotOrthogonal { overlap: f64 },

    #[error("invalid density matrix: {0}")]
    InvalidDensity(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("operator must be nonzero")]
    ZeroOperator,

    #[error("operator must be traceless (trace {trace:.3e})")]
    NotTraceless { trace: f64 },

    #[error("ill-separated spectrum: cluster diameter {diameter:.3e} exceeds {limit:.3e}")]
    IllSeparatedSpectrum { diameter: f64, limit: f64 },

    #[error("degenerate spectrum: gap {gap:.3e} below tolerance")]
    DegenerateSpectrum { gap: f64 },

    #[error("degenerate energy choice: {0}")]
    DegenerateEnergies(String),

    #[error("bath rate matrix is not positive semidefinite at nu={nu} (min eigenvalue {min_eig:.3e})")]
    RateNotPsd { nu: f64, min_eig: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("integration failed at t={t}: {reason}")]
    Integration { t: f64, reason: String },

    #[error("serialization: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
