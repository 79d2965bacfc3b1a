use num_complex::Complex64;
use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("point {0} lies outside the domain of the matrix function")]
    Domain(Complex64),

    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },

    #[error("dimension mismatch: expected {expected}, found {found} ({context})")]
    DimensionMismatch {
        expected: usize,
        found: usize,
        context: String,
    },

    #[error("matrix function is singular on the contour near z = {z} (sigma_min = {sigma:.3e})")]
    SingularOnContour { z: Complex64, sigma: f64 },

    #[error("no convergence: {0}")]
    NoConvergence(String),

    #[error("component touches the grid border or the domain exclusion; no contour extracted")]
    FlaggedComponent,

    #[error("pencil A - zB is singular (det vanishes identically)")]
    SingularPencil,

    #[error("matrix is defective or has an ill-conditioned eigenbasis: {0}")]
    DefectiveMatrix(String),

    #[error("leading Chebyshev coefficient is ill-conditioned (cond = {0:.3e})")]
    IllConditionedLeadingCoeff(f64),

    #[error("colleague eigendecomposition residual {0:.3e} too large")]
    DefectiveColleague(f64),

    #[error("Taylor coefficient b = 0 at the given zero")]
    ZeroDerivative,

    #[error("bordered Newton Jacobian is singular at lambda = {0}")]
    SingularJacobian(Complex64),

    #[error("Newton iterate left the domain at lambda = {0}")]
    DomainExit(Complex64),

    #[error("matrix {0} is not symmetric positive definite")]
    NotSpd(String),

    #[error("pencil (B, A) is not definite")]
    PencilNotDefinite,

    #[error("A1 is not rank one (second singular value {0:.3e})")]
    NotRankOne(f64),

    #[error("A0 is not in companion form: {0}")]
    NotCompanion(String),

    #[error("A1 is nilpotent (its nonzero-rank eigenvalue vanishes)")]
    NilpotentA1,

    #[error("trailing 2x2 block cannot be diagonalized")]
    TrailingBlockDefective,

    #[error("guard failed at z = {z}: sigma_min = {sigma:.3e} (threshold {threshold:.3e})")]
    GuardFailed {
        z: Complex64,
        sigma: f64,
        threshold: f64,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn parse(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            location: location.into(),
            message: message.into(),
        }
    }

    /// True for malformed input (as opposed to numerical failure).
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Parse { .. }
                | Error::DimensionMismatch { .. }
                | Error::InvalidArgument(_)
                | Error::Io(_)
                | Error::NotSpd(_)
                | Error::NotRankOne(_)
                | Error::NotCompanion(_)
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
