use thiserror::Error;

/// Crate-wide error type. Variants mirror the failure modes of the public
/// operations; anything user-recoverable carries a human-readable detail.
#[derive(Debug, Error)]
pub enum Error {
    #[error("manifold construction: {0}")]
    Construction(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("out of range: {0}")]
    Range(String),

    /// The grid cannot resolve the weight core at this time value.
    #[error("unresolved core at t = {t}: {detail}")]
    Resolution { t: f64, detail: String },

    /// A lemma hypothesis excludes this exponent (the integral diverges).
    #[error("divergent hypothesis: {0}")]
    Divergent(String),

    #[error("insufficient data: {0}")]
    Insufficient(String),

    #[error("model mismatch: {0}")]
    ModelMismatch(String),

    #[error("eigendecomposition failed: max residual {residual:.3e}")]
    Eigen { residual: f64 },

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
