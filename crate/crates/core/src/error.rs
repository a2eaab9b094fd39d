use thiserror::Error;

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("overflow: {0}")]
    Overflow(String),

    #[error("pole: {0}")]
    Pole(String),

    #[error("did not converge: {0}")]
    NonConvergence(String),

    #[error("series diverges: {0}")]
    Divergence(String),

    #[error("descriptor is not entire: {0}")]
    NonEntire(String),

    #[error("descriptor must be normalized so that phi_0 = 1 (phi_0 = {phi0})")]
    NormalizationMissing { phi0: f64 },

    #[error("|psi_1| + |psi_2| = {r_l} is not inside the convergence radius {r_u}")]
    RadiusViolation { r_l: f64, r_u: f64 },

    #[error("quadrature needs at least {required} angular nodes, got {got}")]
    InsufficientAngularNodes { required: usize, got: usize },

    #[error("weight is not positive at z = {re} + {im}i")]
    NonPositiveWeight { re: f64, im: f64 },

    #[error("weight check failed at n = {failing:?}")]
    WeightMismatch { failing: Vec<usize> },

    #[error("signed weight measure cannot be used here: {0}")]
    SignedMeasure(String),

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("eigen-solver failure: {0}")]
    Eigen(String),

    #[error("scan window exceeds stored points: {0}")]
    Margin(String),

    #[error("degree cap exceeded: {0}")]
    DegreeCap(String),

    #[error("invalid input: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
