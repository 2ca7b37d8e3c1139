use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("model validation failed: {0}")]
    Validation(String),

    #[error("pole of order {0} exceeds the supported maximum of 4")]
    UnsupportedPoleOrder(usize),

    #[error("rational function is singular at the origin")]
    SingularOrigin,

    #[error("integrand is not integrable on the half-line: {0}")]
    NonIntegrable(String),

    #[error("argument {0} lies on the branch cut [0, inf)")]
    BranchCut(Complex64),

    #[error("argument {0} coincides with a pole of the integrand")]
    PoleCollision(Complex64),

    #[error("threshold expansion inconclusive: all coefficients vanish through order {0}")]
    InconclusiveOrder(usize),

    #[error("expansion orders n_a = {n_a}, n_b = {n_b} fall outside the admissible range")]
    RestrictionViolated { n_a: usize, n_b: usize },

    #[error("K(z) - z is numerically singular at z = {z} (|det| = {det_abs:e})")]
    EigenvalueProximity { z: Complex64, det_abs: f64 },

    #[error("embedded eigenvalue suspected at omega = {omega} (smallest singular value {min_sv:e})")]
    EmbeddedEigenvalue { omega: f64, min_sv: f64 },

    #[error("zero-energy classification is borderline: singular value {value:e} is within a decade of the threshold {threshold:e}")]
    BorderlineClassification { value: f64, threshold: f64 },

    #[error("operation requires {expected} but the model is {found}")]
    ClassificationMismatch { expected: String, found: String },

    #[error("zero mode is not normalizable: <psi|Gamma_1|psi> = {0:e}")]
    NonNormalizable(f64),

    #[error("zero vector supplied where a nonzero vector is required")]
    TrivialVector,

    #[error("argument outside the domain of validity: {0}")]
    Domain(String),

    #[error("quadrature budget exhausted; achieved error estimate {achieved:e}")]
    BudgetExceeded { achieved: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),
}
