use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Failures reported by the library.
///
/// Variants fall into three families (see [`Error::kind`]): malformed input,
/// domain errors where the input is well formed but violates a structural
/// requirement, and numerical failures.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not skew-symmetric (max |A + A^T| = {max_defect:e})")]
    NotSkew { max_defect: f64 },
    #[error("matrix is not orthogonal (max |Q^T Q - I| = {max_defect:e})")]
    NotOrthogonal { max_defect: f64 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("zero matrix has an empty coimage")]
    ZeroMatrix,
    #[error("skew operator is singular (smallest frequency {min_freq:e})")]
    Singular { min_freq: f64 },
    #[error("structure matrices are linearly dependent (smallest singular value {sigma_min:e})")]
    DependentStructureMatrices { sigma_min: f64 },
    #[error("{p} vertical directions exceed m(m-1)/2 = {max} for m = {m}")]
    TooManyVerticals { m: usize, p: usize, max: usize },
    #[error("helical structure is not completely nontrivial (n = {n}, p = {p}, |w| = {w_norm:e})")]
    NotCompletelyNontrivial { n: usize, p: usize, w_norm: f64 },
    #[error("algebra is not of contact type (p = {p})")]
    NotContact { p: usize },
    #[error("curves do not share a horizontal space: {0}")]
    MismatchedHorizontalSpaces(String),
    #[error("vertical directions are linearly dependent (smallest singular value {sigma_min:e})")]
    DependentVerticals { sigma_min: f64 },
    #[error("curve {index} is affine (v = 0)")]
    AffineCurve { index: usize },
    #[error("geodesic {index} is not distinguished (tau0 must be the unit vector e_{index})")]
    NotDistinguished { index: usize },
    #[error("base point does not project to the curve start (gap {gap:e})")]
    BasepointMismatch { gap: f64 },
    #[error("curve is not horizontal at s = {s} (vertical defect {defect:e})")]
    NotHorizontal { s: f64, defect: f64 },
    #[error("eigen-decomposition failed: {0}")]
    EigenFailure(String),
    #[error("curve fit failed (rms residual {residual:e}): {reason}")]
    FitFailed { residual: f64, reason: String },
    #[error("integrator step size underflow at s = {s}")]
    StepSizeUnderflow { s: f64 },
}

/// Coarse classification used to pick process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Input,
    Domain,
    Numerical,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::NotSquare { .. }
            | Error::DimensionMismatch(_)
            | Error::InvalidInput(_) => ErrorKind::Input,
            Error::EigenFailure(_) | Error::FitFailed { .. } | Error::StepSizeUnderflow { .. } => {
                ErrorKind::Numerical
            }
            _ => ErrorKind::Domain,
        }
    }

    /// Stable name of the variant, used in structured reports.
    pub fn name(&self) -> &'static str {
        match self {
            Error::NotSquare { .. } => "NotSquare",
            Error::NotSkew { .. } => "NotSkew",
            Error::NotOrthogonal { .. } => "NotOrthogonal",
            Error::DimensionMismatch(_) => "DimensionMismatch",
            Error::InvalidInput(_) => "InvalidInput",
            Error::ZeroMatrix => "ZeroMatrix",
            Error::Singular { .. } => "Singular",
            Error::DependentStructureMatrices { .. } => "DependentStructureMatrices",
            Error::TooManyVerticals { .. } => "TooManyVerticals",
            Error::NotCompletelyNontrivial { .. } => "NotCompletelyNontrivial",
            Error::NotContact { .. } => "NotContact",
            Error::MismatchedHorizontalSpaces(_) => "MismatchedHorizontalSpaces",
            Error::DependentVerticals { .. } => "DependentVerticals",
            Error::AffineCurve { .. } => "AffineCurve",
            Error::NotDistinguished { .. } => "NotDistinguished",
            Error::BasepointMismatch { .. } => "BasepointMismatch",
            Error::NotHorizontal { .. } => "NotHorizontal",
            Error::EigenFailure(_) => "EigenFailure",
            Error::FitFailed { .. } => "FitFailed",
            Error::StepSizeUnderflow { .. } => "StepSizeUnderflow",
        }
    }
}
