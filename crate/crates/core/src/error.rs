use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("element belongs to `{found}` but `{expected}` was required")]
    OwnerMismatch { expected: String, found: String },

    #[error("payload shape does not match algebra `{0}`")]
    Shape(String),

    #[error("element is not quasi-invertible: 1 + a is singular")]
    NotQuasiInvertible,

    #[error("seminorm level {level} out of range for {count} levels")]
    LevelOutOfRange { level: usize, count: usize },

    #[error("invalid algebra parameters: {0}")]
    InvalidAlgebra(String),

    #[error("malformed element json: {0}")]
    Json(String),

    #[error("element outside the square-root domain: {0}")]
    OutsideSqrtDomain(String),

    #[error("power series diverges: |a| = {0} >= 1")]
    Divergent(f64),

    #[error("family `{family}` cannot act here: {reason}")]
    FamilyMismatch { family: String, reason: String },

    #[error("invalid sampling grid: {0}")]
    InvalidGrid(String),

    #[error("no threshold within horizon {horizon} for net point {point}")]
    ThresholdNotFound { point: usize, horizon: f64 },

    #[error("invalid reparameterization: {0}")]
    InvalidReparam(String),

    #[error("reparameterization search failed at t = {t}: {witness}")]
    SearchFailed { t: f64, witness: String },

    #[error("net point {index} is not quasi-unitary (defect {defect:e})")]
    NotQuasiUnitary { index: usize, defect: f64 },

    #[error("invalid homotopy input: {0}")]
    InvalidHomotopy(String),
}
