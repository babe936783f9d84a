use thiserror::Error;

use crate::model::Symmetry;

/// Every failure the library can report. Numerical pathologies that are
/// part of the physics (instability, degeneracy) live in the returned
/// values instead, so an `Error` always means the request could not be met.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("symmetry {symmetry:?} violated at index {index:?} by {magnitude:e}")]
    SymmetryViolation {
        symmetry: Symmetry,
        index: [usize; 4],
        magnitude: f64,
    },
    #[error("kinetic matrix is not Hermitian (defect {defect:e} at ({row}, {col}))")]
    NonHermitianKinetic { row: usize, col: usize, defect: f64 },
    #[error("non-finite entry in {0}")]
    NonFinite(&'static str),
    #[error("interaction profile is not even: vhat[{index}] != vhat[{mirror}]")]
    ProfileNotEven { index: usize, mirror: usize },
    #[error("model carries no squared-interaction tensor")]
    MissingW2,
    #[error("shifted kinetic two-body form is not positive definite")]
    NonPositiveKinetic,
    #[error("zero coefficient vector")]
    ZeroVector,
    #[error("self-consistent iteration did not converge after {iterations} steps (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("two minimizers overlap by {overlap}; a continuous family of minimizers is suspected")]
    ContinuousFamilySuspected { overlap: f64 },
    #[error("state is not stationary (residual {0:e})")]
    NotStationary(f64),
    #[error("Bogoliubov spectrum is not stable")]
    NotStable,
    #[error("Fock space of dimension {dim} exceeds the cap {cap}")]
    SizeOverflow { dim: u128, cap: usize },
    #[error("eigensolver converged only {0} eigenpairs")]
    ConvergenceFailure(usize),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("condensate is dynamically unstable")]
    UnstableCondensate,
    #[error("minimizer set is degenerate or not finite: {0}")]
    DegenerateMinimizer(String),
    #[error("target level is not available: {0}")]
    TargetUnstable(String),
    #[error("N = {n} is below 3 delta = {bound}")]
    InsufficientN { n: usize, bound: f64 },
    #[error("not enough data for a fit: {0}")]
    InsufficientData(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    /// Stable machine-readable identifier, used by the command line front end.
    pub fn code(&self) -> &'static str {
        match self {
            Error::SymmetryViolation { .. } => "SymmetryViolation",
            Error::NonHermitianKinetic { .. } => "NonHermitianKinetic",
            Error::NonFinite(_) => "NonFinite",
            Error::ProfileNotEven { .. } => "ProfileNotEven",
            Error::MissingW2 => "MissingW2",
            Error::NonPositiveKinetic => "NonPositiveKinetic",
            Error::ZeroVector => "ZeroVector",
            Error::NoConvergence { .. } => "NoConvergence",
            Error::ContinuousFamilySuspected { .. } => "ContinuousFamilySuspected",
            Error::NotStationary(_) => "NotStationary",
            Error::NotStable => "NotStable",
            Error::SizeOverflow { .. } => "SizeOverflow",
            Error::ConvergenceFailure(_) => "ConvergenceFailure",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::UnstableCondensate => "UnstableCondensate",
            Error::DegenerateMinimizer(_) => "DegenerateMinimizer",
            Error::TargetUnstable(_) => "TargetUnstable",
            Error::InsufficientN { .. } => "InsufficientN",
            Error::InsufficientData(_) => "InsufficientData",
            Error::InvalidInput(_) => "InvalidInput",
            Error::Parse(_) => "Parse",
            Error::Io(_) => "Io",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
